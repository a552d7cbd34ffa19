//! Posterior queries and d-separation on the autonomy submodel.
//!
//! cargo run --example inference

use oius::bn::Evidence;
use oius::model_tools::models;

fn main() -> Result<(), oius::bn::BnError> {
    let net = models::autonomy_submodel();
    println!("{} variables, {} edges", net.len(), net.edges().len());

    let prior = net.posterior(&Evidence::new(), "autonomyLoss")?;
    println!("P(autonomyLoss)                          = {prior:.4?}");

    let frail = Evidence::new().with("muscleImpairment", "1").with("getUpAlone", "0");
    let post = net.posterior(&frail, "autonomyLoss")?;
    println!("P(autonomyLoss | muscle impairment, ...) = {post:.4?}");

    let e = Evidence::new().with("doShopping", "0");
    println!("P(autonomyLoss = 1 | no shopping)        = {:.4}", net.prob_of(&e, "autonomyLoss", "1")?);

    for (a, b, given) in [
        ("sex", "autonomyLoss", vec!["diabetes", "strokeTIA"]),
        ("dementia", "parkinson", vec![]),
        ("dementia", "parkinson", vec!["autonomyLoss"]),
    ] {
        let sep = net.d_separated(a, b, &given)?;
        println!("{a} _|_ {b} | {given:?}: {sep}");
    }
    Ok(())
}
