use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use segflow_core::almgren::compute_series;
use segflow_core::grid::laplacian;
use segflow_core::relax::{relax_to_equilibrium, step_imex, RelaxOptions};
use segflow_core::spectra::{minimize_l, CircleProblem};
use segflow_core::{AlmgrenVariant, CylinderGrid, FlowConfig, HarmonicModel, SymmetryGroup, XbcKind};

fn grid_kernels(c: &mut Criterion) {
    let g = CylinderGrid::new(0.0, 4.0, 2, 256, 128).unwrap();
    let s = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
    c.bench_function("laplacian 256x128", |b| b.iter(|| laplacian(black_box(&s.components[0])).unwrap()));
    c.bench_function("almgren series 256x128", |b| {
        b.iter(|| compute_series(black_box(&s), AlmgrenVariant::Sym { a: 0.0 }, 1.0).unwrap())
    });
}

fn relaxation(c: &mut Criterion) {
    let g = CylinderGrid::new(0.0, 4.0, 2, 128, 64).unwrap();
    let s = HarmonicModel::Phi.sample_split(&g, XbcKind::NeumannLeft).unwrap();
    c.bench_function("imex step 128x64", |b| b.iter(|| step_imex(black_box(&s), 0.05, 1.0).unwrap()));
    let group = SymmetryGroup::shift_reflect(&g);
    let cfg = FlowConfig { residual_tol: 1e-11 * s.max_trace(), ..Default::default() };
    let mut grp = c.benchmark_group("relax");
    grp.sample_size(10);
    grp.bench_function("newton cosh R=4 128x64", |b| {
        b.iter(|| relax_to_equilibrium(black_box(&s), &group, &cfg, &RelaxOptions::default()).unwrap())
    });
    grp.finish();
}

fn circle(c: &mut Criterion) {
    let mut grp = c.benchmark_group("circle");
    grp.sample_size(10);
    for k in [2usize, 3] {
        let p = CircleProblem::new(k, 1e3, 2400);
        grp.bench_function(format!("minimize k={k} Lambda=1e3"), |b| b.iter(|| minimize_l(black_box(&p)).unwrap()));
    }
    grp.finish();
}

criterion_group!(benches, grid_kernels, relaxation, circle);
criterion_main!(benches);
