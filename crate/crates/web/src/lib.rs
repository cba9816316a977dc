//! Browser bindings for the ellikorn demo page. Every export returns a JSON string:
//! the result object on success, `{"error": "..."}` otherwise, so the page only
//! needs `JSON.parse`.

use ellikorn::domains::{check_chain_properties, emanating_chains, make_domain, whitney_cover, DomainKind, GridDomain};
use ellikorn::ellipticity::{c_ellipticity, is_elliptic};
use ellikorn::korn_bench::{korn_constant_p2, EigenMethod, KornOptions};
use ellikorn::poly_core::gallery::{by_name, gallery};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

/// Finest grid for the Korn eigenproblem, which grows like n² and runs on one thread.
const KORN_MAX_CELLS: u32 = 24;
/// Finest grid for chain covers.
const COVER_MAX_CELLS: u32 = 64;

fn finish(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn domain(kind: &str, n: u32, max: u32) -> Result<GridDomain, String> {
    if !(4..=max).contains(&n) {
        return Err(format!("cells per unit length must lie in 4..={max}, got {n}"));
    }
    let kind = DomainKind::parse(kind, &[]).map_err(|e| e.to_string())?;
    make_domain(kind, 1.0 / n as f64).map_err(|e| e.to_string())
}

/// Names, dimensions and kernel notes of the built-in operators.
#[wasm_bindgen]
pub fn operators() -> String {
    let list: Vec<Value> = gallery()
        .into_iter()
        .map(|e| json!({ "name": e.name, "n": e.op.n, "k": e.op.k, "note": e.note }))
        .collect();
    Value::Array(list).to_string()
}

/// ℂ-ellipticity verdict, kernel dimensions per degree and witness of a gallery operator.
#[wasm_bindgen]
pub fn verdict(name: &str) -> String {
    finish((|| {
        let op = by_name(name).ok_or_else(|| format!("unknown operator {name}"))?;
        let prof = c_ellipticity(&op, 12);
        let mut block = prof.verdict_block();
        block["elliptic"] = json!(is_elliptic(&op, 400, 1e-6).elliptic);
        block["kernel_dim"] = json!(prof.total_kernel_dim());
        Ok(block)
    })())
}

/// Discrete Korn constant of a planar gallery operator on a domain with n cells per unit.
#[wasm_bindgen]
pub fn korn_constant(name: &str, kind: &str, n: u32) -> String {
    finish((|| {
        let op = by_name(name).ok_or_else(|| format!("unknown operator {name}"))?;
        if op.n != 2 {
            return Err("Korn constants are computed for planar operators only".into());
        }
        let d = domain(kind, n, KORN_MAX_CELLS)?;
        let opts = KornOptions { method: EigenMethod::Lanczos, ..Default::default() };
        let k = korn_constant_p2(&op, &d, &opts).map_err(|e| e.to_string())?;
        Ok(json!({ "h": k.h, "C": k.c, "dofs": k.dofs, "witness_norms": k.witness_norms }))
    })())
}

/// Chain cover of a domain: cubes in physical coordinates, chains and the check booleans.
#[wasm_bindgen]
pub fn chain_cover(kind: &str, n: u32) -> String {
    finish((|| {
        let d = domain(kind, n, COVER_MAX_CELLS)?;
        let cc = emanating_chains(&whitney_cover(&d), &d).map_err(|e| e.to_string())?;
        let rep = check_chain_properties(&cc, &d);
        let square = |q: &ellikorn::domains::Cube| {
            let (c, side) = q.physical(cc.h, cc.origin);
            [c[0] - side / 2.0, c[1] - side / 2.0, side]
        };
        let mask: Vec<u8> = d.mask.iter().map(|&m| m as u8).collect();
        Ok(json!({
            "nx": d.grid.nx,
            "ny": d.grid.ny,
            "h": d.grid.h,
            "origin": d.grid.origin,
            "mask": mask,
            "whitney": cc.whitney.iter().map(square).collect::<Vec<_>>(),
            "cover": cc.cubes.iter().map(square).collect::<Vec<_>>(),
            "chains": cc.chains,
            "sigma1": rep.sigma1,
            "sigma2": rep.sigma2,
            "checks": { "c1": rep.c1, "c2": rep.c2, "c3": rep.c3, "balls": rep.balls_ok, "diameter": rep.diam_ok },
        }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn operator_list_has_the_gallery() {
        assert_eq!(parse(&operators()).as_array().unwrap().len(), 9);
    }

    #[test]
    fn symmetric_gradient_verdict() {
        let v = parse(&verdict("sym_grad_2d"));
        assert_eq!(v["verdict"], "c_elliptic");
        assert_eq!(v["kernel_dim"], 3);
        assert_eq!(v["elliptic"], true);
        assert_eq!(parse(&verdict("eps_dev_2d"))["verdict"], "not_c_elliptic");
        assert!(parse(&verdict("nope"))["error"].is_string());
    }

    #[test]
    fn korn_constant_of_the_full_gradient_is_below_one() {
        let k = parse(&korn_constant("grad_2d", "square", 8));
        let c = k["C"].as_f64().unwrap();
        assert!(c <= 1.0 && c > 0.99, "{k}");
        assert!(parse(&korn_constant("sym_grad_3d", "square", 8))["error"].is_string());
        assert!(parse(&korn_constant("grad_2d", "square", 32))["error"].is_string());
    }

    #[test]
    fn chain_cover_on_the_slit() {
        let c = parse(&chain_cover("slit", 16));
        assert_eq!((c["nx"].as_u64(), c["ny"].as_u64()), (Some(16), Some(16)));
        assert!(c["checks"].as_object().unwrap().values().all(|b| b == true), "{c}");
        let cover = c["cover"].as_array().unwrap();
        assert_eq!(cover.len(), c["chains"].as_array().unwrap().len());
        assert_eq!(c["mask"].as_array().unwrap().len(), 256);
    }
}
