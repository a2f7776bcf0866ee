use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Budget;

/// Per-input values used when the full grid is too large.
pub const CORNERS: [i64; 7] = [0, 1, -1, 2, -2, 7, -8];

/// FNV-1a, stable across toolchains unlike `DefaultHasher`.
fn stream_key(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Grid values per input for `vars` inputs under `budget`.
fn grid_values(vars: usize, budget: &Budget) -> Vec<i64> {
    let full: Vec<i64> = (budget.grid_min..=budget.grid_max).collect();
    let points = (full.len() as u64).checked_pow(vars as u32);
    if points.is_some_and(|p| p <= budget.max_grid_points) {
        full
    } else {
        CORNERS.to_vec()
    }
}

/// Calls `visit` on each assignment of the search for program `name` with
/// `vars` inputs, in order, until it breaks. Returns the number visited and
/// whether the search covered every possible input.
pub(super) fn explore(
    name: &str,
    vars: usize,
    budget: &Budget,
    mut visit: impl FnMut(&[i64]) -> ControlFlow<()>,
) -> (u64, bool) {
    let mut tried = 0u64;
    let mut values = vec![0i64; vars];
    if vars == 0 {
        let _ = visit(&values);
        return (1, true);
    }

    let grid = grid_values(vars, budget);
    let mut digits = vec![0usize; vars];
    'grid: while tried < budget.max_grid_points {
        for (v, &d) in values.iter_mut().zip(&digits) {
            *v = grid[d];
        }
        tried += 1;
        if visit(&values).is_break() {
            return (tried, false);
        }
        // The first input varies slowest.
        for i in (0..vars).rev() {
            digits[i] += 1;
            if digits[i] < grid.len() {
                continue 'grid;
            }
            digits[i] = 0;
        }
        break;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ stream_key(name));
    for _ in 0..budget.samples {
        for v in values.iter_mut() {
            *v = rng.gen::<i32>() as i64;
        }
        tried += 1;
        if visit(&values).is_break() {
            break;
        }
    }
    (tried, false)
}

/// Every assignment the search for `name` would try, in order.
pub fn search_space(name: &str, vars: usize, budget: &Budget) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    explore(name, vars, budget, |v| {
        out.push(v.to_vec());
        ControlFlow::Continue(())
    });
    out
}
