//! Python bindings. Each binding is a thin wrapper over a plain function in
//! [`api`] that returns JSON-shaped data, converted to Python objects here.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

pub mod api {
    use serde_json::{json, Value};
    use stplan::global_planner::plan;
    use stplan::miqp::{instances, solve_bnb, solve_enumerate};
    use stplan::sim::{presets, step_episode, trefoil_position, Scenario, TrefoilParams};
    use stplan::stsfc::SfcMode;
    use stplan::world::VoxelGrid;
    use stplan::Vec3;

    /// A preset scenario as a scenario file.
    pub fn preset(name: &str, seed: u64, count: usize, v_max: f64, worst_case: bool) -> Result<String, String> {
        let mode = if worst_case { SfcMode::WorstCase } else { SfcMode::Spatiotemporal };
        let s = match name {
            "empty" => presets::empty(seed),
            "static_forest" => presets::static_forest(seed, count),
            "dynamic_trefoil" => presets::dynamic_trefoil(seed, count),
            "dense_dynamic" => presets::dense_dynamic(seed, v_max, mode),
            "negative_control" => presets::negative_control(seed, 2.0),
            other => return Err(format!("unknown preset `{other}`")),
        };
        Ok(s.to_toml())
    }

    /// Runs one episode; returns `{"metrics": {...}, "timings": {...}, "trace": [...]}`.
    pub fn run_episode(scenario_toml: &str) -> Result<Value, String> {
        let sc = Scenario::from_toml(scenario_toml).map_err(|e| e.to_string())?;
        let ep = step_episode(&sc, None).map_err(|e| e.to_string())?;
        let to = |v: &dyn erased::Ser| v.to_value();
        Ok(json!({ "metrics": to(&ep.metrics), "timings": to(&ep.timings), "trace": to(&ep.trace) }))
    }

    /// Heat-free A* over a grid in the text dump format.
    pub fn astar(grid_text: &str, start: [f64; 3], goal: [f64; 3], w_heat: f64) -> Result<Value, String> {
        let g = VoxelGrid::from_text(grid_text).map_err(|e| e.to_string())?;
        let p = plan(&g, &|_| 0.0, &Vec3::from(start), &Vec3::from(goal), w_heat).map_err(|e| e.to_string())?;
        let pts: Vec<[f64; 3]> = p.waypoints.iter().map(|w| [w.x, w.y, w.z]).collect();
        Ok(json!({ "waypoints": pts, "cost": p.cost, "partial": p.partial }))
    }

    /// Seeded MIQP instance solved by branch and bound and by enumeration.
    pub fn solve_instance(seed: u64, n: usize, p: usize) -> Result<Value, String> {
        let prob = instances::random_instance(seed, n, p).map_err(|e| e.to_string())?;
        let bnb = solve_bnb(&prob, None);
        let en = solve_enumerate(&prob);
        let side = |r: &Result<stplan::miqp::MiqpSolution, stplan::miqp::MiqpError>| match r {
            Ok(s) => json!({ "feasible": true, "objective": s.objective, "assignment": s.assignment, "nodes": s.stats.nodes }),
            Err(e) => json!({ "feasible": false, "error": e.to_string() }),
        };
        Ok(json!({ "bnb": side(&bnb), "enumerate": side(&en) }))
    }

    pub fn trefoil(center: [f64; 3], scale: f64, speed: f64, offset: f64, t: f64) -> [f64; 3] {
        let p = trefoil_position(&TrefoilParams { center: Vec3::from(center), scale, speed, offset }, t);
        [p.x, p.y, p.z]
    }

    mod erased {
        pub trait Ser {
            fn to_value(&self) -> serde_json::Value;
        }
        impl<T: serde::Serialize> Ser for T {
            fn to_value(&self) -> serde_json::Value {
                serde_json::to_value(self).expect("plain data serializes")
            }
        }
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let out = PyList::empty(py);
            for x in a {
                out.append(to_py(py, x)?)?;
            }
            out.into_any()
        }
        Value::Object(m) => {
            let out = PyDict::new(py);
            for (k, x) in m {
                out.set_item(k, to_py(py, x)?)?;
            }
            out.into_any()
        }
    })
}

fn value_err(e: String) -> PyErr {
    PyValueError::new_err(e)
}

/// Scenario file text for a named preset.
#[pyfunction]
#[pyo3(signature = (name, seed=0, count=4, v_max=2.5, worst_case=false))]
fn preset(name: &str, seed: u64, count: usize, v_max: f64, worst_case: bool) -> PyResult<String> {
    api::preset(name, seed, count, v_max, worst_case).map_err(value_err)
}

/// Runs one episode from scenario file text and returns metrics, timings and trace.
#[pyfunction]
fn run_episode<'py>(py: Python<'py>, scenario_toml: &str) -> PyResult<Bound<'py, PyAny>> {
    let v = py.detach(|| api::run_episode(scenario_toml)).map_err(value_err)?;
    to_py(py, &v)
}

#[pyfunction]
#[pyo3(signature = (grid_text, start, goal, w_heat=0.0))]
fn astar<'py>(py: Python<'py>, grid_text: &str, start: [f64; 3], goal: [f64; 3], w_heat: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &api::astar(grid_text, start, goal, w_heat).map_err(value_err)?)
}

#[pyfunction]
fn solve_instance<'py>(py: Python<'py>, seed: u64, n: usize, p: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &api::solve_instance(seed, n, p).map_err(value_err)?)
}

#[pyfunction]
fn trefoil_position(center: [f64; 3], scale: f64, speed: f64, offset: f64, t: f64) -> [f64; 3] {
    api::trefoil(center, scale, speed, offset, t)
}

#[pymodule]
fn stplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(astar, m)?)?;
    m.add_function(wrap_pyfunction!(solve_instance, m)?)?;
    m.add_function(wrap_pyfunction!(trefoil_position, m)?)?;
    Ok(())
}
