use eft_core::extinction::{extinction_bound, BoundStatus};
use eft_core::groundstate::{minimize_lambda1, LambdaCurve, MinimizeOptions};
use eft_core::potential::{parse_potential, Domain};
use eft_core::simulator::{simulate, InitialData, SimConfig};

fn curve_for(text: &str, n: usize, y0: f64) -> LambdaCurve {
    let spec = parse_potential(text, Domain::unit_interval(1.0, 64).unwrap()).unwrap();
    let opts = MinimizeOptions {
        resolution: n,
        ..MinimizeOptions::default()
    };
    let pairs = (0..=12)
        .map(|k| {
            let h = y0 * 10f64.powf(-0.5 * k as f64);
            (h, minimize_lambda1(&spec, 1, 0.5, h, &opts).unwrap().lambda)
        })
        .collect();
    LambdaCurve::from_samples(pairs).unwrap()
}

#[test]
fn scaled_potential_extinguishes_faster() {
    let n = 127;
    let mut times = Vec::new();
    for text in ["const:1", "const:4"] {
        let spec = parse_potential(text, Domain::unit_interval(1.0, 64).unwrap()).unwrap();
        let cfg = SimConfig {
            m: 1,
            q: 0.5,
            n,
            dt: 2e-4,
            t_max: 1.0,
            potential: spec,
            initial: InitialData::Sine,
            eps_rel: 0.0,
        };
        let run = simulate(&cfg).unwrap();
        let y0 = run.trace[0].l2sq;
        let BoundStatus::Bound(t) = extinction_bound(&curve_for(text, n, y0), y0)
            .unwrap()
            .status
        else {
            panic!("expected a bound for {text}");
        };
        // first-order splitting; the bound is nearly sharp for large constants
        assert!(
            run.extinct() && run.extinction_time <= t + cfg.dt,
            "{text}: {} vs {t}",
            run.extinction_time
        );
        times.push(run.extinction_time);
    }
    assert!(times[1] < times[0]);
}

#[test]
fn ground_state_sweep_is_reproducible() {
    let a = curve_for("radialexp:alpha=1", 64, 0.5);
    let b = curve_for("radialexp:alpha=1", 64, 0.5);
    assert_eq!(a, b);
}
