// scratch check of denoising SNR orderings (removed before release)
use graphfilt_core::filter::PolyFilter;
use graphfilt_core::graph::build_random_geometric;
use graphfilt_core::inverse::ApproxSpec;
use graphfilt_core::models::{four_strip, NoiseModel, StationaryModel};
use graphfilt_core::poly::MultiPoly;
use graphfilt_core::shift::Shift;
use graphfilt_core::signal::{snr, Signal};
use graphfilt_core::wiener::{Probability, WienerProblem};
use graphfilt_core::SolveOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let n = 256usize;
    let mut seed = 7u64;
    let (g, coords) = loop {
        let (g, c) = build_random_geometric(n, seed).unwrap();
        if g.min_degree() >= 1 { break (g, c); }
        seed += 1;
    };
    println!("graph seed {seed}, edges {}, min deg {}", g.edge_count(), g.min_degree());
    let g = Arc::new(g);
    let l = Arc::new(Shift::normalized_laplacian(g.clone()).unwrap());
    let ident = PolyFilter::new(vec![l.clone()], MultiPoly::constant(1, 1.0)).unwrap();
    let t0 = Instant::now();
    let _ = ident.spectral().unwrap();
    println!("eigensolve {:?}", t0.elapsed());

    let r_poly = MultiPoly::univariate(vec![1.0, 0.5]);
    let cov = ident.with_poly(r_poly.clone()).unwrap();
    let stat_model = StationaryModel::stationary(cov.clone()).unwrap();
    let wb_model_c1 = StationaryModel::wide_band(cov.clone(), 1.0).unwrap();
    let wb_model_c5 = StationaryModel::wide_band(cov, 5.0).unwrap();
    let strip = four_strip(g.clone(), &coords).unwrap();

    let trials = 200usize;
    let solver = ApproxSpec::jpa(0.0, -0.5, 3);
    let opts = SolveOptions::default().with_rtol(1e-11).with_iters(200);
    let t1 = Instant::now();

    for model in ["stationary", "fourstrip", "wideband_c1", "wideband_c5"] {
        println!("== {model}");
        for eps in [0.5f64, 1.0, 1.5, 2.0] {
            let e2 = eps * eps;
            // noise covariance: eps^2 I for stationary/fourstrip, eps^2 L for wideband
            let (g_poly, noise_model) = if model.starts_with("wideband") {
                let gp = MultiPoly::univariate(vec![0.0, e2]);
                (gp.clone(), NoiseModel::new(ident.with_poly(gp).unwrap()).unwrap())
            } else {
                let gp = MultiPoly::constant(1, e2);
                (gp.clone(), NoiseModel::new(ident.with_poly(gp).unwrap()).unwrap())
            };
            let k_w = MultiPoly::univariate(vec![0.0, e2 / (4.0 * n as f64)]);
            let k_t = MultiPoly::univariate(vec![0.0, e2 / (2.0 * n as f64)]);
            let prob_w0 = WienerProblem::new(ident.clone(), r_poly.clone(), g_poly.clone(), MultiPoly::constant(1,0.0), Probability::Uniform, None).unwrap();
            let prob_reg = WienerProblem::new(ident.clone(), r_poly.clone(), g_poly.clone(), k_w, Probability::Uniform, None).unwrap();
            let prob_tik = WienerProblem::new(ident.clone(), r_poly.clone(), g_poly.clone(), k_t, Probability::Uniform, None).unwrap();
            let prep_w0 = prob_w0.prepare(&solver).unwrap();
            let prep_reg = prob_reg.prepare(&solver).unwrap();
            let (mut s0, mut sr, mut st, mut si) = (0.0, 0.0, 0.0, 0.0);
            for trial in 0..trials {
                let mut rng = ChaCha12Rng::seed_from_u64(5000 + trial as u64);
                let x = match model {
                    "stationary" => stat_model.sample_with_rng(&mut rng),
                    "fourstrip" => strip.clone(),
                    "wideband_c1" => wb_model_c1.sample_with_rng(&mut rng),
                    _ => wb_model_c5.sample_with_rng(&mut rng),
                };
                let eps_sig = noise_model.sample_with_rng(&mut rng);
                let mut y = x.clone();
                y.axpy(1.0, &eps_sig);
                let w0 = prep_w0.wiener0(&prob_w0, &y, &opts).unwrap().signal;
                let wr = prep_reg.wiener_mse(&prob_reg, &y, &opts).unwrap().signal;
                let (tk, _, _) = prob_tik.tikhonov_apply(&y, 4000, 1e-11).unwrap();
                s0 += snr(&x, &w0).unwrap();
                sr += snr(&x, &wr).unwrap();
                st += snr(&x, &tk).unwrap();
                si += graphfilt_core::signal::isnr(&x, &eps_sig).unwrap();
            }
            let k = trials as f64;
            println!("  eps={eps}: ISNR={:.2} w0={:.3} wreg={:.3} tik={:.3}  (w0-tik={:+.3}, w0-wreg={:+.3}, wreg-w0={:+.3})",
                si/k, s0/k, sr/k, st/k, s0/k - st/k, s0/k - sr/k, sr/k - s0/k);
        }
    }
    println!("total {:?}", t1.elapsed());
}
