//! Enumerate stopping times and stop a martingale.

use varhardy::martingale::{count_stopping_times, enumerate_stopping_times, stop, validate_stopping_time, Martingale, INF};
use varhardy::space::{build_dyadic_space, RandomVariable};

fn main() -> varhardy::Result<()> {
    for d in 1..=4 {
        println!("depth {d}: {} stopping times", count_stopping_times(&build_dyadic_space(d)?));
    }
    let space = build_dyadic_space(2)?;
    for t in enumerate_stopping_times(&space, 100)? {
        let row: Vec<String> = t.values().iter().map(|&v| if v == INF { "inf".into() } else { v.to_string() }).collect();
        println!("  [{}]", row.join(", "));
    }

    let f = Martingale::from_terminal(&space, &RandomVariable::new(vec![4.0, 0.0, -2.0, 2.0]))?;
    let tau = validate_stopping_time(&space, vec![1, 1, INF, INF])?;
    let stopped = stop(&f, &tau)?;
    println!("f_N      = {:?}", f.terminal().values());
    println!("f^tau_N  = {:?}", stopped.terminal().values());
    Ok(())
}
