//! Graph signals: real vectors indexed by the vertices of a graph.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct Signal {
    graph: Arc<Graph>,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(graph: Arc<Graph>, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.vertex_count() {
            return Err(CoreError::DimensionMismatch {
                expected: graph.vertex_count(),
                got: values.len(),
            });
        }
        Ok(Self { graph, values })
    }

    pub fn zeros(graph: Arc<Graph>) -> Self {
        let n = graph.vertex_count();
        Self { graph, values: vec![0.0; n] }
    }

    pub fn constant(graph: Arc<Graph>, value: f64) -> Self {
        let n = graph.vertex_count();
        Self { graph, values: vec![value; n] }
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn axpy(&mut self, a: f64, other: &Signal) {
        for (y, x) in self.values.iter_mut().zip(other.values.iter()) {
            *y += a * x;
        }
    }

    /// Writes one value per line with a `# n=<count>` header.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# n={}", self.len())?;
        for v in &self.values {
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_to(&mut f)
    }

    /// Reads the one-value-per-line format; the `# n=` header is optional
    /// but checked when present.
    pub fn read_from(graph: Arc<Graph>, r: impl std::io::Read) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut values = Vec::new();
        let mut declared: Option<usize> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(count) = rest.strip_prefix("n=") {
                    declared = Some(count.trim().parse().map_err(|_| CoreError::Parse {
                        line: lineno,
                        msg: format!("invalid count `{count}`"),
                    })?);
                }
                continue;
            }
            let v: f64 = t.parse().map_err(|_| CoreError::Parse {
                line: lineno,
                msg: format!("invalid value `{t}`"),
            })?;
            values.push(v);
        }
        if let Some(n) = declared {
            if n != values.len() {
                return Err(CoreError::Parse {
                    line: 0,
                    msg: format!("header declares n={n} but {} values present", values.len()),
                });
            }
        }
        Signal::new(graph, values)
    }

    pub fn load(graph: Arc<Graph>, path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(graph, std::fs::File::open(path)?)
    }
}

/// Output signal-to-noise ratio in dB: `-20 log10(||x_hat - x|| / ||x||)`.
/// Exact recovery returns `f64::INFINITY`. Errors on a zero truth signal.
pub fn snr(x_true: &Signal, x_hat: &Signal) -> Result<f64> {
    let denom = x_true.norm();
    if denom == 0.0 {
        return Err(CoreError::InvalidParameter("SNR undefined for zero truth signal".into()));
    }
    let mut err = 0.0;
    for (a, b) in x_true.values().iter().zip(x_hat.values().iter()) {
        err += (a - b) * (a - b);
    }
    let err = err.sqrt();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * (err / denom).log10())
}

/// Input signal-to-noise ratio in dB: `-20 log10(||noise|| / ||x||)`.
pub fn isnr(x_true: &Signal, noise: &Signal) -> Result<f64> {
    let denom = x_true.norm();
    if denom == 0.0 {
        return Err(CoreError::InvalidParameter("ISNR undefined for zero truth signal".into()));
    }
    let num = noise.norm();
    if num == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * (num / denom).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_circulant;

    fn graph4() -> Arc<Graph> {
        Arc::new(build_circulant(4, &[1]).unwrap())
    }

    #[test]
    fn exact_recovery_is_infinite_snr() {
        let g = graph4();
        let x = Signal::new(g.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(snr(&x, &x).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ten_percent_error_is_twenty_db() {
        let g = graph4();
        let x = Signal::new(g.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let xh = Signal::new(g, vec![1.1, 0.0, 0.0, 0.0]).unwrap();
        assert!((snr(&x, &xh).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn noise_equal_to_signal_is_zero_isnr() {
        let g = graph4();
        let x = Signal::new(g.clone(), vec![1.0, -1.0, 2.0, 0.5]).unwrap();
        assert!(isnr(&x, &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_truth_rejected() {
        let g = graph4();
        let z = Signal::zeros(g.clone());
        let x = Signal::constant(g, 1.0);
        assert!(snr(&z, &x).is_err());
        assert!(isnr(&z, &x).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let g = graph4();
        let x = Signal::new(g.clone(), vec![1.0 / 3.0, -2.5e-7, 4.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        x.write_to(&mut buf).unwrap();
        let back = Signal::read_from(g, &buf[..]).unwrap();
        assert_eq!(x.values(), back.values());
    }

    #[test]
    fn header_count_mismatch_rejected() {
        let g = graph4();
        let text = "# n=3\n1.0\n2.0\n";
        assert!(Signal::read_from(g, text.as_bytes()).is_err());
    }
}
