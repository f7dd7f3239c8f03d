//! Oracles shared by integration tests.

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = rhs[i];
        }
        *o = det(mk) / d;
    }
    Some(out)
}

/// Vertex enumeration of
/// min x0/c0 + x2/c2 + x3/c3 s.t. x0 + x2 >= r2, x0 + x3 >= r3, x0 + x2 + x3 >= r, x >= 0.
pub fn lp_min_power(r2: f64, r3: f64, r: f64, c2: f64, c3: f64, c0: f64) -> f64 {
    let rows: [([f64; 3], f64); 6] = [
        ([1.0, 1.0, 0.0], r2),
        ([1.0, 0.0, 1.0], r3),
        ([1.0, 1.0, 1.0], r),
        ([1.0, 0.0, 0.0], 0.0),
        ([0.0, 1.0, 0.0], 0.0),
        ([0.0, 0.0, 1.0], 0.0),
    ];
    let cost = [1.0 / c0, 1.0 / c2, 1.0 / c3];
    let mut best = f64::INFINITY;
    for i in 0..6 {
        for j in i + 1..6 {
            for k in j + 1..6 {
                let m = [rows[i].0, rows[j].0, rows[k].0];
                let Some(x) = solve3(m, [rows[i].1, rows[j].1, rows[k].1]) else {
                    continue;
                };
                let feasible = rows
                    .iter()
                    .all(|(a, b)| a[0] * x[0] + a[1] * x[1] + a[2] * x[2] >= b - 1e-9);
                if feasible {
                    best = best.min(cost[0] * x[0] + cost[1] * x[1] + cost[2] * x[2]);
                }
            }
        }
    }
    best
}
