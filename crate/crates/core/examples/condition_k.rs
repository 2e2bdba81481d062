//! Condition K on a dyadic tree, three ways, plus Aoyama's constant.

use varhardy::space::{aoyama_c, build_dyadic_space, condition_k, ConditionKMode, Exponent};

fn main() -> varhardy::Result<()> {
    let space = build_dyadic_space(3)?;
    let p = Exponent::new(vec![1.2, 1.5, 2.0, 2.0, 3.0, 1.1, 4.0, 2.5])?;
    for mode in [ConditionKMode::ExactPairwise, ConditionKMode::BruteForce, ConditionKMode::BlockRestricted] {
        let k = condition_k(&space, &p, mode)?;
        println!("{mode:?}: K = {:.6}, witness {:?}", k.k, k.witness);
    }
    println!("aoyama C = {:.6}", aoyama_c(&space, &p)?);
    Ok(())
}
