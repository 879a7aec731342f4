//! Every reweighting rule applied to the same block, with its guarantee flag.
//!
//! Run with `cargo run --example reweight_catalog`.

use ldnn::{apply_psi, guarantee_of, ReweightSpec};

fn main() -> ldnn::Result<()> {
    let u = [1.5, -0.4, 0.0, 2.0];
    let v = [0.8, 1.0, 1.2, -0.5];
    let catalog = [
        ReweightSpec::Am,
        ReweightSpec::IrlsEpsAlpha { eps: 1e-6, alpha: 0.5 },
        ReweightSpec::SqrtAbs,
        ReweightSpec::TanhAbs,
        ReweightSpec::TanhSq,
        ReweightSpec::AbsUv,
        ReweightSpec::USq,
        ReweightSpec::GroupBlindTanh,
        ReweightSpec::GroupAwareTanh,
    ];

    println!("u = {u:?}");
    println!("v = {v:?}\n");
    for spec in &catalog {
        let out = apply_psi(spec, &u, &v)?;
        let cells: Vec<String> = out.iter().map(|x| format!("{x:>8.4}")).collect();
        println!(
            "{:<16} {:<18} [{}]",
            spec.name(),
            guarantee_of(spec).as_str(),
            cells.join(" ")
        );
    }

    // the JSON form used in config files
    let parsed: ReweightSpec = serde_json::from_str(r#"{"kind": "irls_eps_alpha", "alpha": 0.25}"#)?;
    println!("\nparsed {parsed:?}");
    Ok(())
}
