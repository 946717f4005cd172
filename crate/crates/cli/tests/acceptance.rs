//! Acceptance criteria A1 to A9 at full size. Prints one line per criterion
//! and fails if any criterion fails. Tolerances live in `steuler::verify`.

use std::process::ExitCode;

use steuler::verify::{self, Criterion};

fn main() -> ExitCode {
    // the same bounds the battery reports against
    assert_eq!(verify::MIDPOINT_L2_DRIFT, 1e-8);
    assert_eq!(verify::HEUN_MIN_ORDER, 1.0);
    assert_eq!(verify::SE_BAND, 3.0);
    assert_eq!(verify::ORACLE_TOL, 1e-10);
    assert_eq!(verify::QV_DT_ALLOWANCE, 2.0);
    assert_eq!(verify::ITO_STRAT_DT_ALLOWANCE, 5.0);
    assert_eq!(verify::STRUCTURE_TOL, 1e-10);
    assert_eq!(verify::DIVERGENCE_TOL, 1e-10);
    assert_eq!(verify::NORMALIZER_STABILITY, 1e-8);

    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for c in Criterion::ALL {
        if !filter.is_empty() && !filter.iter().any(|f| f.eq_ignore_ascii_case(&c.to_string())) {
            continue;
        }
        let o = c.run(false);
        println!("{o}");
        if !o.passed {
            failed.push(c.to_string());
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
