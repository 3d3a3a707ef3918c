//! MAC stencils. Divergence lives at cells, gradient at faces, and the pair is
//! exactly adjoint in the volume-weighted inner products. The convective
//! operator uses a central flux form whose skew part is energy neutral.

use crate::error::Result;
use crate::geometry::NONE;

use super::{same_geometry, ScalarField, StaggeredField};

pub fn divergence(u: &StaggeredField) -> ScalarField {
    let mut out = ScalarField::zeros(u.geometry());
    divergence_into(u, &mut out).expect("fresh output shares the geometry");
    out
}

/// Cell divergence: Σ_a (u_a(high face) − u_a(low face)) / Δx_a.
pub fn divergence_into(u: &StaggeredField, out: &mut ScalarField) -> Result<()> {
    same_geometry(u.geometry(), out.geometry())?;
    let geo = u.geometry().clone();
    let t = geo.tables();
    let dx = geo.spacing();
    let dim = geo.dim();
    let class = geo.cell_class();
    for (c, o) in out.values_mut().iter_mut().enumerate() {
        if !class[c].is_active() {
            *o = 0.0;
            continue;
        }
        let faces = &t.cell_faces[c];
        let mut s = 0.0;
        for a in 0..dim {
            let comp = u.component(a);
            s += (comp[faces[2 * a + 1]] - comp[faces[2 * a]]) / dx[a];
        }
        *o = s;
    }
    Ok(())
}

pub fn gradient(p: &ScalarField) -> StaggeredField {
    let mut out = StaggeredField::zeros(p.geometry());
    gradient_into(p, &mut out).expect("fresh output shares the geometry");
    out
}

/// Face gradient (p(high cell) − p(low cell)) / Δx_a on open faces, zero on
/// closed faces.
pub fn gradient_into(p: &ScalarField, out: &mut StaggeredField) -> Result<()> {
    same_geometry(p.geometry(), out.geometry())?;
    let geo = p.geometry().clone();
    let t = geo.tables();
    let dx = geo.spacing();
    let v = p.values();
    for a in 0..geo.dim() {
        let open = geo.face_open(a);
        let cells = &t.face_cells[a];
        for (f, o) in out.component_mut(a).iter_mut().enumerate() {
            *o = if open[f] {
                let [lo, hi] = cells[f];
                (v[hi] - v[lo]) / dx[a]
            } else {
                0.0
            };
        }
    }
    Ok(())
}

pub fn laplacian(p: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(p.geometry());
    laplacian_into(p, &mut out).expect("fresh output shares the geometry");
    out
}

/// Neumann Laplacian div(grad p): closed faces carry no flux.
pub fn laplacian_into(p: &ScalarField, out: &mut ScalarField) -> Result<()> {
    cell_laplacian(p, out, false)
}

pub fn dirichlet_laplacian(p: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(p.geometry());
    dirichlet_laplacian_into(p, &mut out).expect("fresh output shares the geometry");
    out
}

/// Laplacian with p = 0 imposed on every closed face (antisymmetric ghost).
pub fn dirichlet_laplacian_into(p: &ScalarField, out: &mut ScalarField) -> Result<()> {
    cell_laplacian(p, out, true)
}

fn cell_laplacian(p: &ScalarField, out: &mut ScalarField, dirichlet: bool) -> Result<()> {
    same_geometry(p.geometry(), out.geometry())?;
    let geo = p.geometry().clone();
    let t = geo.tables();
    let dx = geo.spacing();
    let dim = geo.dim();
    let class = geo.cell_class();
    let v = p.values();
    let inv2: Vec<f64> = (0..dim).map(|a| 1.0 / (dx[a] * dx[a])).collect();
    for (c, o) in out.values_mut().iter_mut().enumerate() {
        if !class[c].is_active() {
            *o = 0.0;
            continue;
        }
        let nb = &t.cell_nbrs[c];
        let faces = &t.cell_faces[c];
        let vc = v[c];
        let mut s = 0.0;
        for a in 0..dim {
            let open = geo.face_open(a);
            for side in [2 * a, 2 * a + 1] {
                if open[faces[side]] {
                    s += (v[nb[side]] - vc) * inv2[a];
                } else if dirichlet {
                    s -= 2.0 * vc * inv2[a];
                }
            }
        }
        *o = s;
    }
    Ok(())
}

/// Tangential neighbour of an open face across which the no-slip wall sits
/// half a cell away.
#[inline]
fn tangential_wall(nbr: usize, open: &[bool]) -> bool {
    nbr == NONE || !open[nbr]
}

pub fn vector_laplacian(u: &StaggeredField) -> StaggeredField {
    let mut out = StaggeredField::zeros(u.geometry());
    vector_laplacian_into(u, &mut out).expect("fresh output shares the geometry");
    out
}

/// Componentwise Laplacian on open faces. Closed faces along the normal
/// direction hold zero; tangential walls use the antisymmetric ghost −u.
pub fn vector_laplacian_into(u: &StaggeredField, out: &mut StaggeredField) -> Result<()> {
    same_geometry(u.geometry(), out.geometry())?;
    let geo = u.geometry().clone();
    let t = geo.tables();
    let dx = geo.spacing();
    let dim = geo.dim();
    for a in 0..dim {
        let open = geo.face_open(a);
        let nbrs = &t.face_nbrs[a];
        let ua = u.component(a);
        let oa = out.component_mut(a);
        for f in 0..ua.len() {
            if !open[f] {
                oa[f] = 0.0;
                continue;
            }
            let uf = ua[f];
            let mut s = 0.0;
            for b in 0..dim {
                let inv2 = 1.0 / (dx[b] * dx[b]);
                for side in [2 * b, 2 * b + 1] {
                    let g = nbrs[f][side];
                    let un = if b == a {
                        if g == NONE {
                            0.0
                        } else {
                            ua[g]
                        }
                    } else if tangential_wall(g, open) {
                        -uf
                    } else {
                        ua[g]
                    };
                    s += (un - uf) * inv2;
                }
            }
            oa[f] = s;
        }
    }
    Ok(())
}

/// Discrete ‖∇u‖², equal to −⟨Δu, u⟩ for the vector Laplacian above, written
/// as a sum of squares so it is never negative.
pub fn dissipation(u: &StaggeredField) -> f64 {
    let geo = u.geometry();
    let t = geo.tables();
    let dx = geo.spacing();
    let dim = geo.dim();
    let mut s = 0.0;
    for a in 0..dim {
        let open = geo.face_open(a);
        let nbrs = &t.face_nbrs[a];
        let ua = u.component(a);
        for f in 0..ua.len() {
            if !open[f] {
                continue;
            }
            let uf = ua[f];
            for b in 0..dim {
                let inv2 = 1.0 / (dx[b] * dx[b]);
                // each interior edge counted once from its low side; wall
                // edges and edges into closed faces from the open side
                let hi = nbrs[f][2 * b + 1];
                let lo = nbrs[f][2 * b];
                if b == a {
                    if hi != NONE && open[hi] {
                        s += (ua[hi] - uf).powi(2) * inv2;
                    } else {
                        s += uf * uf * inv2;
                    }
                    if lo == NONE || !open[lo] {
                        s += uf * uf * inv2;
                    }
                } else {
                    if tangential_wall(hi, open) {
                        s += 2.0 * uf * uf * inv2;
                    } else {
                        s += (ua[hi] - uf).powi(2) * inv2;
                    }
                    if tangential_wall(lo, open) {
                        s += 2.0 * uf * uf * inv2;
                    }
                }
            }
        }
    }
    s * geo.cell_volume()
}

/// Transport velocity through the faces of the control volume around face
/// `f` of component `a`, plus the control-volume divergence of it.
struct Transport {
    w: [f64; 6],
    div: f64,
}

#[inline]
fn transport(u: &StaggeredField, a: usize, f: usize) -> Transport {
    let geo = u.geometry();
    let t = geo.tables();
    let dx = geo.spacing();
    let [lo, hi] = t.face_cells[a][f];
    let mut w = [0.0; 6];
    let mut div = 0.0;
    for b in 0..geo.dim() {
        let ub = u.component(b);
        let (wl, wh) = if b == a {
            let nb = &t.face_nbrs[a][f];
            let uf = ub[f];
            let l = if nb[2 * b] == NONE {
                0.0
            } else {
                ub[nb[2 * b]]
            };
            let h = if nb[2 * b + 1] == NONE {
                0.0
            } else {
                ub[nb[2 * b + 1]]
            };
            (0.5 * (l + uf), 0.5 * (uf + h))
        } else {
            let fl = &t.cell_faces[lo];
            let fh = &t.cell_faces[hi];
            (
                0.5 * (ub[fl[2 * b]] + ub[fh[2 * b]]),
                0.5 * (ub[fl[2 * b + 1]] + ub[fh[2 * b + 1]]),
            )
        };
        w[2 * b] = wl;
        w[2 * b + 1] = wh;
        div += (wh - wl) / dx[b];
    }
    Transport { w, div }
}

/// Central flux divergence div(W ⊗ v) of component values `v` on the control
/// volume around face `f`.
#[inline]
fn central_flux(u: &StaggeredField, a: usize, f: usize, tr: &Transport) -> f64 {
    let geo = u.geometry();
    let t = geo.tables();
    let dx = geo.spacing();
    let open = geo.face_open(a);
    let ua = u.component(a);
    let nb = &t.face_nbrs[a][f];
    let uf = ua[f];
    let mut s = 0.0;
    for b in 0..geo.dim() {
        let val = |g: usize| if g == NONE || !open[g] { 0.0 } else { ua[g] };
        let vl = val(nb[2 * b]);
        let vh = val(nb[2 * b + 1]);
        s += (tr.w[2 * b + 1] * 0.5 * (uf + vh) - tr.w[2 * b] * 0.5 * (uf + vl)) / dx[b];
    }
    s
}

pub fn advective(u: &StaggeredField) -> StaggeredField {
    let mut out = StaggeredField::zeros(u.geometry());
    advective_into(u, &mut out).expect("fresh output shares the geometry");
    out
}

/// (u·∇)u in the non-conservative form div(u ⊗ u) − (div u) u.
pub fn advective_into(u: &StaggeredField, out: &mut StaggeredField) -> Result<()> {
    nonlinear_into(u, out, 1.0)
}

pub fn convective(u: &StaggeredField) -> StaggeredField {
    let mut out = StaggeredField::zeros(u.geometry());
    convective_into(u, &mut out).expect("fresh output shares the geometry");
    out
}

/// (u·∇)u + ½(div u)u. Orthogonal to u in the discrete inner product.
pub fn convective_into(u: &StaggeredField, out: &mut StaggeredField) -> Result<()> {
    nonlinear_into(u, out, 0.5)
}

/// (div u) u with the divergence averaged onto faces, the same face
/// divergence the convective operators use.
pub fn divergence_times_velocity(u: &StaggeredField) -> StaggeredField {
    let geo = u.geometry().clone();
    let mut out = StaggeredField::zeros(&geo);
    for a in 0..geo.dim() {
        let open = geo.face_open(a);
        let ua = u.component(a).to_vec();
        for (f, o) in out.component_mut(a).iter_mut().enumerate() {
            if open[f] {
                *o = transport(u, a, f).div * ua[f];
            }
        }
    }
    out
}

fn nonlinear_into(u: &StaggeredField, out: &mut StaggeredField, div_weight: f64) -> Result<()> {
    same_geometry(u.geometry(), out.geometry())?;
    let geo = u.geometry().clone();
    for a in 0..geo.dim() {
        let open = geo.face_open(a);
        let n = u.component(a).len();
        let mut vals = vec![0.0; n];
        for (f, o) in vals.iter_mut().enumerate() {
            if !open[f] {
                continue;
            }
            let tr = transport(u, a, f);
            *o = central_flux(u, a, f, &tr) - div_weight * tr.div * u.component(a)[f];
        }
        out.component_mut(a).copy_from_slice(&vals);
    }
    Ok(())
}

/// Values a field takes on closed faces (the discrete wall trace of the
/// normal component).
pub fn wall_trace(u: &StaggeredField) -> f64 {
    u.max_wall_value()
}
