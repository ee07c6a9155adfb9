//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no generated glue beyond `wasm-bindgen`'s. Failures are returned
//! as `{"error": "..."}`.

use polygon_chsh::bipartite::{conditional_assemblage_for, enumerate_max_entangled, mat_to_rows};
use polygon_chsh::chsh::{chsh_indices, win_from_chsh};
use polygon_chsh::search::{self, ChshSense, Parity};
use polygon_chsh::theory::Theory;
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest n the demo accepts for direct evaluation.
pub const MAX_N: usize = 64;
/// Largest n the demo accepts for a single LP.
pub const MAX_LP_N: usize = 40;

#[derive(Serialize)]
struct Geometry {
    n: usize,
    r: f64,
    vertices: Vec<[f64; 2]>,
    effects: Vec<[f64; 3]>,
    group: Vec<String>,
}

fn error(msg: impl ToString) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn theory(n: usize, max: usize) -> Result<Theory, String> {
    if n > max {
        return Err(format!("n = {n} is above the demo limit {max}"));
    }
    Theory::new(n).map_err(|e| e.to_string())
}

fn to_json(v: impl Serialize) -> String {
    serde_json::to_string(&v).unwrap_or_else(error)
}

/// Vertices, pure effects and symmetry labels of the `n`-gon.
#[wasm_bindgen]
pub fn polygon_geometry(n: usize) -> String {
    let t = match theory(n, MAX_N) {
        Ok(t) => t,
        Err(e) => return error(e),
    };
    to_json(Geometry {
        n,
        r: t.r(),
        vertices: t.pure_states().iter().map(|v| [v.x, v.y]).collect(),
        effects: t.pure_effects().iter().map(|v| [v.x, v.y, v.z]).collect(),
        group: (0..2 * n).map(|g| t.group_label(g)).collect(),
    })
}

/// CHSH value of a maximally entangled state with observables
/// `(E(i), E(j); E(k), E(l))`, plus Bob's conditional states for drawing.
#[wasm_bindgen]
pub fn me_chsh(n: usize, group: usize, i: i32, j: i32, k: i32, l: i32) -> String {
    let t = match theory(n, MAX_N) {
        Ok(t) => t,
        Err(e) => return error(e),
    };
    if group >= 2 * n {
        return error(format!("group element {group} out of range 0..{}", 2 * n));
    }
    let quad = [i, j, k, l].map(i64::from);
    let state = &enumerate_max_entangled(&t)[group].state;
    let c = chsh_indices(&t, state.map(), quad);
    let conditionals: Vec<Value> = [quad[0], quad[1]]
        .iter()
        .enumerate()
        .map(|(s, &idx)| {
            let a = conditional_assemblage_for(state, &t.binary_observable(idx), s);
            json!({
                "probs": a.probs,
                "states": a.states.iter().map(|v| [v.x, v.y]).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "n": n,
        "group": t.group_label(group),
        "chsh": c,
        "p_win": win_from_chsh(c),
        "map": mat_to_rows(state.map()),
        "assemblages": conditionals,
    })
    .to_string()
}

/// Exact maximum and minimum of `C` over the maximal tensor product for
/// fixed observables.
#[wasm_bindgen]
pub fn lp_optimum(n: usize, i: i32, j: i32, k: i32, l: i32) -> String {
    let t = match theory(n, MAX_LP_N) {
        Ok(t) => t,
        Err(e) => return error(e),
    };
    let quad = [i, j, k, l].map(i64::from);
    let run = |sense| search::max_chsh_fixed_obs(&t, quad, sense);
    match (run(ChshSense::Max), run(ChshSense::Min)) {
        (Ok((hi, hs)), Ok((lo, ls))) => json!({
            "n": n,
            "max": hi,
            "min": lo,
            "max_map": mat_to_rows(hs.map()),
            "min_map": mat_to_rows(ls.map()),
        })
        .to_string(),
        (Err(e), _) | (_, Err(e)) => error(e),
    }
}

/// Closed-form optimal `|C|` for `5 <= n <= max_n`.
#[wasm_bindgen]
pub fn optimum_curve(max_n: usize) -> String {
    if max_n > 2001 {
        return error("max_n is limited to 2001");
    }
    match search::closed_form_sweep(Parity::Both, max_n) {
        Ok(rows) => to_json(rows),
        Err(e) => error(e),
    }
}
