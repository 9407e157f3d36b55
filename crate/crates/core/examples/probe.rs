use mcf_ttdl::mode_solver::*;
fn main() {
    let t = std::time::Instant::now();
    let d: Vec<f64> = (0..7).map(|i| 14.75 + i as f64).collect();
    let (tau, outs) = design_cores(&d, None, &DesignBounds::default()).unwrap();
    println!("tau {tau} in {:?}", t.elapsed());
    for o in &outs { println!("{:?} D {:.6} tau {:.4} S {:.5} n {:.6}", o.profile, o.achieved.dispersion, o.achieved.tau_g - tau, o.achieved.slope, o.achieved.n_eff); }
    let mut worst: f64 = 0.0;
    for l in (1530..=1570).step_by(5) {
        let x = l as f64 - 1550.0;
        for w in outs.windows(2) {
            let g = |o: &DesignOutcome| o.achieved.tau_g + o.achieved.dispersion * x + 0.5 * o.achieved.slope * x * x;
            worst = worst.max((g(&w[1]) - g(&w[0]) - x).abs());
        }
    }
    println!("worst {worst}");
}
