//! Without regularity the ratio ||f||_BMO_p / ||f||_BMO_1 is unbounded.

use varhardy::experiments::{nakai_h, nakai_sadasue};

fn main() -> varhardy::Result<()> {
    println!("h_1 = {:.6}, h_10 = {:.6}", nakai_h(1), nakai_h(10));
    let r = nakai_sadasue(20)?;
    for (n, ratio) in r.ratios.iter().enumerate() {
        println!("N = {:>2}: ratio >= {ratio:.4e}", n + 1);
    }
    for note in &r.notes {
        println!("note: {note}");
    }
    Ok(())
}
