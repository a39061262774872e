//! P1 elements on the corner simplex of dimension 3 with the symmetric base
//! `(1/4, 1/4, 1/4, 1/4)`.

use nalgebra::Matrix3;
use rayon::prelude::*;

use super::quadrature::{refine_tet, TetRule};
use super::{scatter, Element, FormMatrices, Mesh};
use crate::density::{log_normalizer, log_rho_with};
use crate::domain::{BaseWeights, Params};
use crate::error::{LabError, Result};

pub const MAX_NODES: usize = 100_000;
const RULE_ORDER: usize = 4;
const MAX_DEPTH: usize = 3;
const REL_TOL: f64 = 1e-4;
/// Per unit of element volume fraction.
const ABS_TOL: f64 = 1e-10;

/// Integrals over one element: `∫ρλ_aλ_b` (a ≤ b) then `∫ρ a_ij` (i ≤ j), then `∫ρ`.
const NV: usize = 17;
type Values = [f64; NV];

/// Kuhn-triangulated mesh of `{0 ≤ s1 ≤ s2 ≤ s3 ≤ 1}` in cumulative
/// coordinates `s_k = x_1 + … + x_k`.
#[derive(Debug, Clone)]
pub struct SimplexMesh {
    pub m: usize,
    /// Integer cumulative coordinates `(a, b, c)` with `a ≤ b ≤ c ≤ m`.
    pub nodes: Vec<[usize; 3]>,
    pub tets: Vec<[usize; 4]>,
}

pub fn node_count(m: usize) -> usize {
    (m + 1) * (m + 2) * (m + 3) / 6
}

impl SimplexMesh {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(LabError::InvalidArgument("mesh size must be positive".into()));
        }
        let count = node_count(m);
        if count > MAX_NODES {
            return Err(LabError::MeshTooFine { nodes: count, cap: MAX_NODES });
        }
        let mut nodes = Vec::with_capacity(count);
        let mut index = std::collections::HashMap::with_capacity(count);
        for c in 0..=m {
            for b in 0..=c {
                for a in 0..=b {
                    index.insert([a, b, c], nodes.len());
                    nodes.push([a, b, c]);
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let ordered = |v: &[usize; 3]| v[0] <= v[1] && v[1] <= v[2] && v[2] <= m;
        let mut tets = Vec::with_capacity(m * m * m);
        for c in 0..m {
            for b in 0..=c {
                for a in 0..=b {
                    for perm in PERMS {
                        let mut v = [a, b, c];
                        let mut verts = [v; 4];
                        for (k, &axis) in perm.iter().enumerate() {
                            v[axis] += 1;
                            verts[k + 1] = v;
                        }
                        if verts.iter().all(ordered) {
                            tets.push(verts.map(|v| index[&v]));
                        }
                    }
                }
            }
        }
        Ok(Self { m, nodes, tets })
    }

    /// Free coordinates `(x1, x2, x3)` of node `k`.
    pub fn coords(&self, k: usize) -> [f64; 3] {
        let h = 1.0 / self.m as f64;
        let [a, b, c] = self.nodes[k];
        [a as f64 * h, (b - a) as f64 * h, (c - b) as f64 * h]
    }
}

/// Rules matched to the singular strata of `ρ_3`: the density behaves like
/// `r^{θ−5/2}` near a vertex of the simplex and `r^{θ−1}` near an edge.
struct Rules {
    plain: TetRule,
    edge_point: TetRule,
    edge: TetRule,
    corner: TetRule,
    corner_edge: TetRule,
}

impl Rules {
    fn new(theta: f64) -> Self {
        Self {
            plain: TetRule::conical(RULE_ORDER),
            edge_point: TetRule::vertex_collapsed(RULE_ORDER, theta - 1.0, 0.0),
            edge: TetRule::edge_collapsed(RULE_ORDER, theta - 1.0),
            corner: TetRule::vertex_collapsed(RULE_ORDER, theta - 2.5, 0.0),
            corner_edge: TetRule::vertex_collapsed(RULE_ORDER, theta - 2.5, theta - 1.0),
        }
    }
}

/// Which singular strata a sub-tetrahedron touches.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Plan {
    Plain,
    /// One vertex on an edge of the simplex.
    EdgePoint(usize),
    /// Two vertices on the same edge of the simplex.
    Edge(usize, usize),
    /// One vertex at a corner of the simplex.
    Corner(usize),
    /// Several unrelated strata; refine before integrating.
    Mixed,
}

const ZERO: f64 = 1e-12;

struct Integrand<'a> {
    base: &'a BaseWeights,
    theta: f64,
    log_c: f64,
    verts: [[f64; 3]; 4],
    rules: &'a Rules,
}

type Sub = [[f64; 4]; 4];

impl Integrand<'_> {
    fn physical(&self, lam: &[f64; 4]) -> [f64; 4] {
        let mut x = [0.0; 4];
        for k in 0..4 {
            for i in 0..3 {
                x[i] += lam[k] * self.verts[k][i];
            }
        }
        x[3] = 1.0 - x[0] - x[1] - x[2];
        x
    }

    /// Bitmask of the vanishing coordinates at each vertex of `sub`.
    fn zero_sets(&self, sub: &Sub) -> [u8; 4] {
        sub.map(|lam| {
            let x = self.physical(&lam);
            (0..4).filter(|&i| x[i].abs() < ZERO).fold(0u8, |m, i| m | (1 << i))
        })
    }

    fn classify(&self, sub: &Sub) -> Plan {
        let z = self.zero_sets(sub);
        let count = |k: usize| z[k].count_ones();
        let corners: Vec<usize> = (0..4).filter(|&k| count(k) == 3).collect();
        let edges: Vec<usize> = (0..4).filter(|&k| count(k) == 2).collect();
        match (corners.as_slice(), edges.as_slice()) {
            ([], []) => Plan::Plain,
            ([c], e) if e.iter().all(|&k| z[k] & z[*c] == z[k]) => Plan::Corner(*c),
            ([], [k]) => Plan::EdgePoint(*k),
            ([], [i, j]) if z[*i] == z[*j] => Plan::Edge(*i, *j),
            _ => Plan::Mixed,
        }
    }

    fn eval(&self, lam: &[f64; 4], out: &mut Values) {
        let x = self.physical(lam);
        if x.iter().any(|&v| v <= 0.0) {
            *out = [0.0; NV];
            return;
        }
        let rho = log_rho_with(x.iter().copied(), self.base, self.theta, self.log_c).density();
        let mut k = 0;
        for a in 0..4 {
            for b in a..4 {
                out[k] = rho * lam[a] * lam[b];
                k += 1;
            }
        }
        for i in 0..3 {
            for j in i..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[k] = rho * x[i] * (delta - x[j]);
                k += 1;
            }
        }
        out[k] = rho;
    }

    /// Rule applied to a sub-tetrahedron given in element barycentrics;
    /// `frac` is its volume relative to the element.
    fn apply(&self, rule: &TetRule, sub: &Sub, frac: f64, acc: &mut Values) {
        let mut buf = [0.0; NV];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let mut lam = [0.0; 4];
            for k in 0..4 {
                for j in 0..4 {
                    lam[j] += p[k] * sub[k][j];
                }
            }
            self.eval(&lam, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += w * frac * b;
            }
        }
    }

    fn integrate(&self, sub: &Sub, frac: f64, plan: Plan) -> Values {
        let mut acc = [0.0; NV];
        let others = |k: usize| -> [usize; 3] {
            let mut o = [0; 3];
            let mut n = 0;
            for j in 0..4 {
                if j != k {
                    o[n] = j;
                    n += 1;
                }
            }
            o
        };
        match plan {
            Plan::Plain | Plan::Mixed => self.apply(&self.rules.plain, sub, frac, &mut acc),
            Plan::EdgePoint(k) => {
                let [a, b, c] = others(k);
                self.apply(&self.rules.edge_point, &[sub[k], sub[a], sub[b], sub[c]], frac, &mut acc);
            }
            Plan::Edge(i, j) => {
                let rest: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
                self.apply(&self.rules.edge, &[sub[i], sub[j], sub[rest[0]], sub[rest[1]]], frac, &mut acc);
            }
            Plan::Corner(k) => {
                // Split the opposite face into six triangles, each with one
                // original vertex, so every face corner can carry its own weight.
                let o = others(k);
                let z = self.zero_sets(sub);
                let mut centroid = [0.0; 4];
                for &j in &o {
                    for t in 0..4 {
                        centroid[t] += sub[j][t] / 3.0;
                    }
                }
                for &i in &o {
                    for &j in &o {
                        if i == j {
                            continue;
                        }
                        let mut mid = [0.0; 4];
                        for t in 0..4 {
                            mid[t] = 0.5 * (sub[i][t] + sub[j][t]);
                        }
                        let rule = if z[i].count_ones() == 2 { &self.rules.corner_edge } else { &self.rules.corner };
                        self.apply(rule, &[sub[k], centroid, sub[i], mid], frac / 6.0, &mut acc);
                    }
                }
            }
        }
        acc
    }

    fn adaptive(&self, sub: &Sub, frac: f64, coarse: Values, plan: Plan, depth: usize) -> Values {
        let children = refine_tet(sub);
        let plans: Vec<Plan> = children.iter().map(|c| self.classify(c)).collect();
        let parts: Vec<Values> =
            children.iter().zip(&plans).map(|(c, &p)| self.integrate(c, frac / 8.0, p)).collect();
        let mut fine = [0.0; NV];
        for p in &parts {
            for (a, b) in fine.iter_mut().zip(p) {
                *a += b;
            }
        }
        let err = (fine[NV - 1] - coarse[NV - 1]).abs();
        let converged = plan != Plan::Mixed && err <= REL_TOL * fine[NV - 1].abs() + ABS_TOL * frac;
        if depth >= MAX_DEPTH || converged {
            return fine;
        }
        let mut total = [0.0; NV];
        for ((c, p), plan) in children.iter().zip(parts).zip(plans) {
            let v = self.adaptive(c, frac / 8.0, p, plan, depth + 1);
            for (a, b) in total.iter_mut().zip(&v) {
                *a += b;
            }
        }
        total
    }
}

/// Assembles stiffness and mass on the mesh with spacing `1/m`.
pub fn assemble_3d(params: &Params, m: usize) -> Result<FormMatrices> {
    let mesh = SimplexMesh::new(m)?;
    let base = BaseWeights::symmetric(3)?;
    let log_c = log_normalizer(&base, params);
    let rules = Rules::new(params.theta());
    let coords: Vec<[f64; 3]> = (0..mesh.nodes.len()).map(|k| mesh.coords(k)).collect();
    let vol = 1.0 / (6.0 * (m * m * m) as f64);
    let reference = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let elements: Vec<Element<4>> = mesh
        .tets
        .par_iter()
        .map(|&idx| {
            let verts = idx.map(|k| coords[k]);
            let integrand = Integrand { base: &base, theta: params.theta(), log_c, verts, rules: &rules };
            let plan = integrand.classify(&reference);
            let coarse = integrand.integrate(&reference, 1.0, plan);
            let v = integrand.adaptive(&reference, 1.0, coarse, plan, 1);
            let jac = Matrix3::from_fn(|i, k| verts[k + 1][i] - verts[0][i]);
            let inv = jac.try_inverse().expect("degenerate element");
            let mut grads = [[0.0; 3]; 4];
            for k in 1..4 {
                for i in 0..3 {
                    grads[k][i] = inv[(k - 1, i)];
                }
            }
            for i in 0..3 {
                grads[0][i] = -(grads[1][i] + grads[2][i] + grads[3][i]);
            }
            let mut a = [[0.0; 3]; 3];
            let mut k = 10;
            for i in 0..3 {
                for j in i..3 {
                    a[i][j] = v[k] * vol;
                    a[j][i] = a[i][j];
                    k += 1;
                }
            }
            let mut ml = [[0.0; 4]; 4];
            let mut kl = [[0.0; 4]; 4];
            let mut k = 0;
            for p in 0..4 {
                for q in p..4 {
                    ml[p][q] = v[k] * vol;
                    k += 1;
                    let mut s = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            s += a[i][j] * grads[p][i] * grads[q][j];
                        }
                    }
                    kl[p][q] = 0.5 * s;
                }
            }
            (idx, kl, ml)
        })
        .collect();
    let (stiffness, mass) = scatter(mesh.nodes.len(), &elements);
    let total: f64 = elements
        .iter()
        .map(|(_, _, m)| (0..4).map(|p| m[p][p] + 2.0 * (p + 1..4).map(|q| m[p][q]).sum::<f64>()).sum::<f64>())
        .sum();
    Ok(FormMatrices {
        d: 3,
        theta: params.theta(),
        mesh: Mesh::Simplex { m, elements: mesh.tets.len() },
        nodes: coords.iter().map(|c| c.to_vec()).collect(),
        stiffness,
        mass,
        mass_defect: 1.0 - total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_lab::detailed_balance_check;

    #[test]
    fn mesh_counts() {
        for m in [1, 2, 5, 8] {
            let mesh = SimplexMesh::new(m).unwrap();
            assert_eq!(mesh.nodes.len(), node_count(m));
            assert_eq!(mesh.tets.len(), m * m * m);
        }
        assert!(matches!(SimplexMesh::new(100), Err(LabError::MeshTooFine { .. })));
    }

    #[test]
    fn elements_tile_the_simplex() {
        let mesh = SimplexMesh::new(4).unwrap();
        let vol: f64 = mesh
            .tets
            .iter()
            .map(|t| {
                let v = t.map(|k| mesh.coords(k));
                Matrix3::from_fn(|i, k| v[k + 1][i] - v[0][i]).determinant().abs() / 6.0
            })
            .sum();
        assert!((vol - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn structural_properties_at_h_eighth() {
        let fm = assemble_3d(&Params::new(0.0).unwrap(), 8).unwrap();
        assert!(fm.constant_defect() < 1e-8, "{}", fm.constant_defect());
        assert!(detailed_balance_check(&fm).pass);
        assert!(fm.mass_defect.abs() < 5e-3, "{}", fm.mass_defect);
    }

    #[test]
    fn linear_moments_match_symmetric_base() {
        // Under the symmetric base E[x_i] = 1/4 and the linear eigenrelation
        // gives E(x_1, x_1) = ½ E[x_1(1 − x_1)].
        let fm = assemble_3d(&Params::new(1.0).unwrap(), 8).unwrap();
        let one = vec![1.0; fm.len()];
        let total = fm.inner(&one, &one);
        let u = fm.interpolate(|x| x[0]);
        assert!((fm.inner(&u, &one) / total - 0.25).abs() < 1e-3);
        let second = fm.inner(&u, &u);
        let e = fm.energy(&u, &u);
        assert!((e - 0.5 * (fm.inner(&u, &one) - second)).abs() < 1e-3);
    }
}
