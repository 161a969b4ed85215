//! Finite symmetry groups acting on k-tuples of grid fields, and the orbit
//! average that projects a state onto the invariant class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CylinderGrid, Field, StateK, XbcKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Generator {
    /// `u_i(x, y) -> u_i(2 x0 - x, y)`.
    EvenInX { x0: f64 },
    /// `(g U)_{i+1}(y) = U_i(y - P/k)`, indices mod the component count.
    ShiftYWithPermutation,
    /// Component i is reflected about `y0 + i P/k`.
    ReflectY { y0: f64 },
    /// `(g U)_{i+1} = U_i`.
    ComponentCycle,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetryGroup {
    pub generators: Vec<Generator>,
}

impl SymmetryGroup {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn new(generators: Vec<Generator>) -> Self {
        Self { generators }
    }

    /// Shift-with-permutation plus the reflection about pi/2 (scaled with the period).
    pub fn shift_reflect(grid: &CylinderGrid) -> Self {
        Self::new(vec![
            Generator::ShiftYWithPermutation,
            Generator::ReflectY { y0: 0.5 * grid.period / grid.k as f64 },
        ])
    }
}

/// Index map of one generator on flat indices `i * len + j * ny + m`.
enum IndexMap {
    EvenX { b: usize },
    Shift { s: usize },
    Reflect { axes: Vec<usize> },
    Cycle,
}

impl IndexMap {
    fn build(gen: &Generator, grid: &CylinderGrid, ncomp: usize) -> Result<Self> {
        let aligned = |v: f64| -> Option<usize> {
            let r = v.round();
            ((v - r).abs() <= 1e-9 && r >= 0.0).then_some(r as usize)
        };
        match gen {
            Generator::EvenInX { x0 } => {
                let b = aligned(2.0 * (x0 - grid.a) / grid.hx())
                    .ok_or_else(|| Error::Symmetry(format!("x0={x0} is not node-aligned")))?;
                if b != grid.nx {
                    return Err(Error::Symmetry(format!(
                        "reflection about x0={x0} does not map [a,b] onto itself"
                    )));
                }
                Ok(IndexMap::EvenX { b })
            }
            Generator::ShiftYWithPermutation => {
                if ncomp != grid.k {
                    return Err(Error::Symmetry(format!(
                        "shift with permutation needs k={} components, state has {ncomp}",
                        grid.k
                    )));
                }
                Ok(IndexMap::Shift { s: grid.shift_nodes() })
            }
            Generator::ReflectY { y0 } => {
                let cell = grid.period / grid.k as f64;
                let mut axes = Vec::with_capacity(ncomp);
                for i in 0..ncomp {
                    let two = 2.0 * (y0 + i as f64 * cell) / grid.hy();
                    let r = aligned(two.rem_euclid(2.0 * grid.ny as f64)).ok_or_else(|| {
                        Error::Symmetry(format!("reflection axis y0={y0} is not node-aligned"))
                    })?;
                    axes.push(r % grid.ny);
                }
                Ok(IndexMap::Reflect { axes })
            }
            Generator::ComponentCycle => Ok(IndexMap::Cycle),
        }
    }

    #[inline]
    fn apply(&self, i: usize, j: usize, m: usize, ny: usize, ncomp: usize) -> (usize, usize, usize) {
        match self {
            IndexMap::EvenX { b } => (i, b - j, m),
            IndexMap::Shift { s } => ((i + 1) % ncomp, j, (m + s) % ny),
            IndexMap::Reflect { axes } => (i, j, (axes[i] + ny - m) % ny),
            IndexMap::Cycle => ((i + 1) % ncomp, j, m),
        }
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

/// Partition of all nodes of a k-tuple into group orbits.
#[derive(Clone, Debug)]
pub struct Orbits {
    /// Orbit id of each flat node; ids are numbered by smallest member.
    pub id: Vec<u32>,
    /// Members of orbit `o` are `members[start[o]..start[o+1]]`, ascending.
    pub start: Vec<usize>,
    pub members: Vec<u32>,
    pub len: usize,
    pub ncomp: usize,
}

impl Orbits {
    pub fn new(grid: &CylinderGrid, ncomp: usize, group: &SymmetryGroup) -> Result<Self> {
        let len = grid.len();
        let total = ncomp * len;
        if total >= u32::MAX as usize {
            return Err(Error::Input("grid too large".into()));
        }
        let maps = group
            .generators
            .iter()
            .map(|g| IndexMap::build(g, grid, ncomp))
            .collect::<Result<Vec<_>>>()?;
        let ny = grid.ny;
        let mut parent: Vec<u32> = (0..total as u32).collect();
        for map in &maps {
            for i in 0..ncomp {
                for j in 0..=grid.nx {
                    for m in 0..ny {
                        let p = (i * len + j * ny + m) as u32;
                        let (i2, j2, m2) = map.apply(i, j, m, ny, ncomp);
                        let q = (i2 * len + j2 * ny + m2) as u32;
                        let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
                        if rp != rq {
                            let (lo, hi) = if rp < rq { (rp, rq) } else { (rq, rp) };
                            parent[hi as usize] = lo;
                        }
                    }
                }
            }
        }
        let mut id = vec![u32::MAX; total];
        let mut root_id = vec![u32::MAX; total];
        let mut count = 0u32;
        let mut sizes: Vec<usize> = Vec::new();
        for p in 0..total {
            let r = find(&mut parent, p as u32) as usize;
            if root_id[r] == u32::MAX {
                root_id[r] = count;
                count += 1;
                sizes.push(0);
            }
            id[p] = root_id[r];
            sizes[root_id[r] as usize] += 1;
        }
        let mut start = Vec::with_capacity(count as usize + 1);
        start.push(0);
        for s in &sizes {
            start.push(start.last().unwrap() + s);
        }
        let mut fill = start.clone();
        let mut members = vec![0u32; total];
        for p in 0..total {
            let o = id[p] as usize;
            members[fill[o]] = p as u32;
            fill[o] += 1;
        }
        Ok(Self { id, start, members, len, ncomp })
    }

    pub fn count(&self) -> usize {
        self.start.len() - 1
    }

    #[inline]
    pub fn orbit(&self, o: usize) -> &[u32] {
        &self.members[self.start[o]..self.start[o + 1]]
    }

    /// Orbit average of concatenated component values, in place.
    pub fn average(&self, values: &mut [f64]) {
        for o in 0..self.count() {
            let mem = self.orbit(o);
            if mem.len() == 1 {
                continue;
            }
            let mut mean = 0.0;
            for (n, &p) in mem.iter().enumerate() {
                mean += (values[p as usize] - mean) / (n + 1) as f64;
            }
            for &p in mem {
                values[p as usize] = mean;
            }
        }
    }

    /// Largest spread `max - min` within any orbit.
    pub fn max_spread(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for o in 0..self.count() {
            let mem = self.orbit(o);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in mem {
                let v = values[p as usize];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            worst = worst.max(hi - lo);
        }
        worst
    }
}

pub(crate) fn concat(state: &StateK) -> Vec<f64> {
    let mut v = Vec::with_capacity(state.ncomp() * state.grid().len());
    for c in &state.components {
        v.extend_from_slice(c.values());
    }
    v
}

pub(crate) fn split(state: &StateK, values: &[f64]) -> Result<StateK> {
    let len = state.grid().len();
    let comps = state
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| Field::with_boundary(*c.grid(), c.xbc().clone(), values[i * len..(i + 1) * len].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    StateK::new(comps, state.t)
}

/// Orbit average under `group`, using precomputed orbits.
pub fn symmetrize_with(state: &StateK, orbits: &Orbits) -> Result<StateK> {
    if orbits.ncomp != state.ncomp() || orbits.len != state.grid().len() {
        return Err(Error::Input("orbits were built for a different state shape".into()));
    }
    let mut v = concat(state);
    orbits.average(&mut v);
    let g = state.grid();
    let ny = g.ny;
    let scale = state.max_abs().max(f64::MIN_POSITIVE);
    for (i, c) in state.components.iter().enumerate() {
        let mut cols = vec![g.nx];
        if c.xbc().kind() == XbcKind::Dirichlet {
            cols.push(0);
        }
        for j in cols {
            for m in 0..ny {
                let p = i * orbits.len + j * ny + m;
                if (v[p] - c.values()[j * ny + m]).abs() > 1e-12 * scale {
                    return Err(Error::Symmetry("Dirichlet traces are not invariant under the group".into()));
                }
            }
        }
    }
    split(state, &v)
}

pub fn symmetrize(state: &StateK, group: &SymmetryGroup) -> Result<StateK> {
    let orbits = Orbits::new(state.grid(), state.ncomp(), group)?;
    symmetrize_with(state, &orbits)
}

/// Sup-norm distance from the symmetry class.
pub fn symmetry_drift(state: &StateK, orbits: &Orbits) -> f64 {
    orbits.max_spread(&concat(state))
}
