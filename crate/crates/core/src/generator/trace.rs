use serde::Serialize;

use super::{evolve, GeneratorMatrix};
use crate::error::{LabError, Result};
use crate::measure::{functionals, DensityRatio};
use crate::transport::TransportBackend;

/// Functionals of `P_t f` at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub variance: f64,
    pub entropy: f64,
    pub fisher: f64,
    pub w2: f64,
    /// `mu((P_t g - m)^2)` with `g = sqrt(f)`, `m = mu(g)`.
    pub sigma2: f64,
    /// `mu((P_t g - m)^4) + 3 sigma2^2`.
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
}

impl FlowTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

pub fn flow_trace(
    generator: &GeneratorMatrix,
    f: &DensityRatio,
    times: &[f64],
    backend: &TransportBackend,
) -> Result<FlowTrace> {
    if times.first() != Some(&0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LabError::invalid("trace times must start at 0 and increase strictly"));
    }
    let mu = generator.measure();
    let g: Vec<f64> = f.values().iter().map(|v| v.sqrt()).collect();
    let m = mu.expect(&g);
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let row = (|| {
            let ft = evolve(generator, f, t)?;
            let b = functionals(&ft, mu)?;
            let w2 = backend.w2(&ft, mu)?;
            let gt = generator.evolve_function(&g, t)?;
            let dev2: Vec<f64> = gt.iter().map(|v| (v - m) * (v - m)).collect();
            let sigma2 = mu.expect(&dev2);
            let fourth = mu.expect(&dev2.iter().map(|d| d * d).collect::<Vec<_>>());
            Ok(TraceRow {
                t,
                variance: b.variance,
                entropy: b.entropy,
                fisher: b.fisher,
                w2,
                sigma2,
                lambda: fourth + 3.0 * sigma2 * sigma2,
            })
        })()
        .map_err(|e: LabError| e.at_time(t))?;
        rows.push(row);
    }
    Ok(FlowTrace { rows })
}
