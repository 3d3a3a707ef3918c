use pyo3::prelude::*;
use pyo3::types::PyDict;

fn exec(script: &std::ffi::CStr) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(acns::acns)(py);
        let globals = PyDict::new(py);
        globals.set_item("acns", module).unwrap();
        if let Err(e) = py.run(script, Some(&globals), None) {
            e.print(py);
            panic!("script failed");
        }
    });
}

#[test]
fn run_from_config_text() {
    exec(
        cr#"
cfg = acns.Config.parse('''
[geometry]
extents = [4.0, 4.0]
cells = [24, 24]

[geometry.obstacle]
shape = "ball"
center = [2.0, 2.0]
radius = 0.4

[solver]
epsilon = 1e-2
dt = 1e-3
t_end = 0.02
snapshot_every = 5
''')
run = acns.run(cfg)
assert run.error is None
assert len(run) == 5
assert run.steps() == [0, 5, 10, 15, 20]
t, e, d, r = run.ledger()
assert len(t) == 21 and e[0] > 0
assert run.relative_residual() < 0.05
geo = cfg.geometry()
assert [len(c) for c in run.velocity(4)] == geo.face_counts()
assert len(run.pressure(0)) == 24 * 24
assert sum(geo.class_counts()) == 24 * 24
assert run.divergence_norm(0) < 1e-6
"#,
    );
}

#[test]
fn leray_split_and_rate_fit() {
    exec(
        cr#"
import random
geo = acns.Geometry([1.0, 1.0], [16, 16])
rng = random.Random(1)
u = [[rng.uniform(-1, 1) for _ in range(n)] for n in geo.face_counts()]
sol, grad = acns.leray_split(geo, u)
again, rest = acns.leray_split(geo, sol)
assert acns.velocity_norm(geo, rest, 2.0) < 1e-6 * acns.velocity_norm(geo, u, 2.0)
s, lo, hi = acns.fit_rate([(x, 3 * x ** 0.5) for x in (1.0, 0.1, 0.01, 0.001)])
assert abs(s - 0.5) < 1e-9 and lo <= s <= hi
assert abs(acns.q_decay_exponent(4.0) - 1 / 72) < 1e-12
try:
    acns.Geometry([1.0, 1.0], [16, 16], obstacle_center=[0.5, 0.5])
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#,
    );
}
