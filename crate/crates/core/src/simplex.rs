//! Nelder-Mead minimization with the standard coefficients
//! (reflection 1, expansion 2, contraction ½, shrink ½).

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub initial_step: f64,
    /// Stop when every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            diameter_tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `x0` (non-empty). NaN values rank as +∞.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: SimplexOptions) -> SimplexResult {
    let dim = x0.len();
    assert!(dim >= 1, "simplex search needs at least one coordinate");
    let eval = |x: &[f64]| sanitize(f(x));
    let mut vertices: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    vertices.push((x0.to_vec(), eval(x0)));
    for j in 0..dim {
        let mut x = x0.to_vec();
        x[j] += opts.initial_step;
        let v = eval(&x);
        vertices.push((x, v));
    }

    let diameter = |vs: &[(Vec<f64>, f64)]| -> f64 {
        let best = &vs[0].0;
        vs[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(best)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    };
    let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(c, w)| c + t * (w - c)).collect()
    };

    let mut iterations = 0;
    loop {
        vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&vertices) < opts.diameter_tol {
            let (x, value) = vertices.swap_remove(0);
            return SimplexResult {
                x,
                value,
                iterations,
                converged: true,
            };
        }
        if iterations >= opts.max_iter {
            let (x, value) = vertices.swap_remove(0);
            return SimplexResult {
                x,
                value,
                iterations,
                converged: false,
            };
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (x, _) in &vertices[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let worst = vertices[dim].clone();
        let best_val = vertices[0].1;
        let second_worst_val = vertices[dim - 1].1;

        let reflected = along(&centroid, &worst.0, -1.0);
        let fr = eval(&reflected);
        if fr < best_val {
            let expanded = along(&centroid, &worst.0, -2.0);
            let fe = eval(&expanded);
            vertices[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < second_worst_val {
            vertices[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = along(&centroid, &reflected, 0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(&centroid, &worst.0, 0.5);
            let v = eval(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            vertices[dim] = (contracted, fc);
            continue;
        }
        let best = vertices[0].0.clone();
        for vertex in vertices.iter_mut().skip(1) {
            let x = along(&best, &vertex.0, 0.5);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
}
