//! Python bindings: parse, check, evaluate and compile pipelines.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fusilli::backend::SemType;
use fusilli::bench::SUITE;
use fusilli::interp::Value;
use fusilli::pipeline::{self, ParamType, PipelineDesc};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn type_name(t: SemType) -> String {
    match t {
        SemType::Float => "double".into(),
        t => t.to_string(),
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Int(i) => i.into_pyobject(py)?.into_any().unbind(),
        Value::Float(x) => x.into_pyobject(py)?.into_any().unbind(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Unit => py.None(),
        Value::Arr(xs) => {
            let items = xs.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            items.into_pyobject(py)?.into_any().unbind()
        }
    })
}

/// A parsed and checked pipeline.
#[pyclass(frozen, module = "pyfusilli")]
struct Pipeline {
    desc: PipelineDesc,
    elem: SemType,
    ret: SemType,
}

impl Pipeline {
    fn new(desc: PipelineDesc) -> PyResult<Self> {
        let c = pipeline::check(&desc).map_err(err)?;
        Ok(Pipeline {
            desc,
            elem: c.elem,
            ret: c.ret,
        })
    }

    fn args(&self, args: Vec<Bound<'_, PyAny>>) -> PyResult<Vec<Value>> {
        if args.len() != self.desc.params.len() {
            return Err(err(format!(
                "{} takes {} arguments, got {}",
                self.desc.name,
                self.desc.params.len(),
                args.len()
            )));
        }
        self.desc
            .params
            .iter()
            .zip(args)
            .map(|(p, a)| {
                let v = match p.ty {
                    ParamType::Int => Value::Int(a.extract()?),
                    ParamType::IntArray => Value::int_array(&a.extract::<Vec<i32>>()?),
                    ParamType::DoubleArray => Value::float_array(&a.extract::<Vec<f64>>()?),
                };
                Ok(v)
            })
            .collect()
    }
}

#[pymethods]
impl Pipeline {
    /// Parses the text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Pipeline::new(pipeline::parse_pipeline(text).map_err(err)?)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Pipeline::new(pipeline::from_json(text).map_err(err)?)
    }

    fn to_json(&self) -> String {
        pipeline::to_json(&self.desc)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.desc.name
    }

    /// `(name, type)` pairs.
    #[getter]
    fn params(&self) -> Vec<(String, &'static str)> {
        self.desc
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.keyword()))
            .collect()
    }

    #[getter]
    fn element_type(&self) -> String {
        type_name(self.elem)
    }

    #[getter]
    fn return_type(&self) -> String {
        type_name(self.ret)
    }

    /// Runs the pipeline in the interpreter.
    #[pyo3(signature = (*args))]
    fn evaluate(&self, py: Python<'_>, args: Vec<Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
        let v = pipeline::evaluate(&self.desc, &self.args(args)?).map_err(err)?;
        to_py(py, &v)
    }

    /// The first `cap` elements reaching the sink.
    #[pyo3(signature = (*args, cap = 10_000))]
    fn drain(&self, py: Python<'_>, args: Vec<Bound<'_, PyAny>>, cap: usize) -> PyResult<Vec<Py<PyAny>>> {
        let vs = pipeline::drain(&self.desc, &self.args(args)?, cap).map_err(err)?;
        vs.iter().map(|v| to_py(py, v)).collect()
    }

    /// The fused C function; `peval=False` skips partial evaluation.
    #[pyo3(signature = (peval = true))]
    fn compile_c(&self, peval: bool) -> PyResult<String> {
        let src = if peval {
            pipeline::compile_to_c(&self.desc)
        } else {
            pipeline::compile_to_c_plain(&self.desc)
        };
        Ok(src.map_err(err)?.text)
    }

    fn __str__(&self) -> String {
        pipeline::print_pipeline(&self.desc)
    }

    fn __repr__(&self) -> String {
        format!("<Pipeline {}>", self.desc.name)
    }
}

/// Scans C text for calls, allocations and aggregate values.
#[pyfunction]
fn fusion_scan<'py>(py: Python<'py>, c_text: &str) -> PyResult<Bound<'py, PyDict>> {
    let r = fusilli::fusion_scan::scan_text(c_text).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed())?;
    d.set_item("calls", r.calls)?;
    d.set_item("allocs", r.allocs)?;
    d.set_item("aggregates", r.aggregates)?;
    Ok(d)
}

/// `(name, text)` for each benchmark pipeline.
#[pyfunction]
fn bench_suite() -> Vec<(&'static str, &'static str)> {
    SUITE.iter().map(|p| (p.name, p.text)).collect()
}

#[pymodule]
fn pyfusilli(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(fusion_scan, m)?)?;
    m.add_function(wrap_pyfunction!(bench_suite, m)?)?;
    Ok(())
}
