//! Library walkthrough: computes the full operating-characteristics table
//! of the bundled reference designs, plus estimation diagnostics for the
//! unit-information pair.
//!
//! ```sh
//! cargo run --release --example reference_table
//! ```

use rmp_core::oc::{
    average_type_one_error, estimation_metrics, max_type_one_error, power, sweet_spot,
    type_one_error, DesignPrior,
};
use rmp_core::reference;
use rmp_core::QuadratureSpec;

fn main() {
    let quad = QuadratureSpec::default();
    println!("omega  n0        a_max   a50     avgINF  avgRMP  pow0    sweet   vag");
    for (omega, n0, design) in reference::bundled_designs() {
        let a50 = type_one_error(&design, 50.0, &quad).unwrap();
        let (amax, _arg) = max_type_one_error(&design, (-5.0, 5.0), 0.01, &quad).unwrap();
        let avg_inf = average_type_one_error(
            &design,
            &DesignPrior::Normal {
                mean: reference::MU_INF,
                variance: reference::S * reference::S / reference::N_INF,
            },
            &quad,
        )
        .unwrap();
        let avg_rmp =
            average_type_one_error(&design, &DesignPrior::Rmp(*design.control_prior()), &quad)
                .unwrap();
        let pow0 = power(&design, 0.0, reference::DELTA_STAR, &quad).unwrap();
        let ss = sweet_spot(
            &design,
            reference::DELTA_STAR,
            0.05,
            0.60,
            (-5.0, 5.0),
            0.01,
            &quad,
        )
        .unwrap();
        let vag = average_type_one_error(
            &design,
            &DesignPrior::TruncatedFlat {
                lo: -50.0,
                hi: 50.0,
            },
            &quad,
        )
        .unwrap();
        println!(
            "{omega:<6.3} {n0:<9.6} {amax:<7.4} {a50:<7.4} {avg_inf:<7.4} {avg_rmp:<7.4} {pow0:<7.4} {:<7.4} {vag:<7.4}",
            ss.widest.width
        );
    }
    let d = reference::design(0.5, 1.0, 0.0);
    for drift in [-1.0, 0.0, 1.0] {
        let m = estimation_metrics(&d, drift, 0.0, &quad).unwrap();
        println!(
            "est D={drift}: bias={:+.5} var={:.5} mse={:.5} resid={:.2e}",
            m.bias,
            m.variance,
            m.mse,
            (m.mse - m.bias * m.bias - m.variance).abs()
        );
    }
}
