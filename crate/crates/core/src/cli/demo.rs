use std::fmt::Write;

use serde::Serialize;

use crate::analytic::mm1k_steady_state;
use crate::circuit::{exact_slice_stages, slice_probabilities, CapMode, ExactLayout};
use crate::error::Result;
use crate::metrics::{fidelity, tv_distance};
use crate::qcore::{measure_counts, ry_matrix, theta_for_prob, ProbVector, StateVector};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplitude {
    pub n: usize,
    pub a_arrival: usize,
    pub a_service: usize,
    pub flag: usize,
    pub amplitude: f64,
}

impl Amplitude {
    fn label(&self) -> String {
        format!("|{:02b};{}{}{}>", self.n, self.a_arrival, self.a_service, self.flag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n: usize,
    pub p_q: f64,
    pub p_c: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub lambda: f64,
    pub mu: f64,
    pub dt: f64,
    pub p_arrival: f64,
    pub p_service: f64,
    pub v0: Vec<f64>,
    pub theta_arr: f64,
    pub theta_srv: f64,
    pub ry_arr: [[f64; 2]; 2],
    pub ry_srv: [[f64; 2]; 2],
    pub post_arrival: Vec<Amplitude>,
    pub post_update: Vec<Amplitude>,
    /// Exact queue law after one slice.
    pub p_slice: ProbVector,
    pub shots: u64,
    pub seed: u64,
    pub p_q: ProbVector,
    pub p_c: ProbVector,
    pub table: Vec<ComparisonRow>,
    pub tv_halved: f64,
    pub l1_gap: f64,
    pub fidelity: f64,
}

fn nonzero(state: &StateVector, lay: &ExactLayout) -> Vec<Amplitude> {
    let mut v = Vec::new();
    for f in 0..2 {
        for a_service in 0..2 {
            for a_arrival in 0..2 {
                for n in 0..=lay.k {
                    let amp = state.amplitudes()[lay.index(n, a_arrival, a_service, f)];
                    if amp.norm() > 1e-12 {
                        v.push(Amplitude { n, a_arrival, a_service, flag: f, amplitude: amp.re });
                    }
                }
            }
        }
    }
    v
}

/// One slice of the λ=0.25, μ=1, K=3, Δt=0.3 example started from the
/// stationary law, measured with `shots` shots.
pub fn demo_report(shots: u64, seed_value: u64) -> Result<DemoReport> {
    let params = super::demo_params();
    let k = params.k;
    let p_c = mm1k_steady_state(params.rho(), k);
    let (pa, ps) = slice_probabilities(&params);
    let st = exact_slice_stages(k, &p_c, pa, ps, CapMode::SignFlip)?;
    let lay = st.layout;
    let theta_arr = theta_for_prob(pa)?;
    let theta_srv = theta_for_prob(ps)?;

    let mut post_update = nonzero(&st.after_update, &lay);
    post_update.sort_by(|a, b| b.amplitude.abs().total_cmp(&a.amplitude.abs()));

    let p_slice = crate::qcore::marginal(&st.after_cap, lay.queue())?;
    let mut rng = seed::rng(seed_value, seed::stream::MEASURE);
    let counts = measure_counts(&st.after_cap, lay.queue(), shots, &mut rng)?;
    let p_q = ProbVector::from_counts(&counts[..=k])?;
    let (tv_halved, l1_gap) = tv_distance(&p_q, &p_c)?;
    let table = (0..=k).map(|n| ComparisonRow { n, p_q: p_q[n], p_c: p_c[n], gap: (p_q[n] - p_c[n]).abs() }).collect();

    Ok(DemoReport {
        lambda: params.lambda,
        mu: 1.0,
        dt: params.dt(),
        p_arrival: pa,
        p_service: ps,
        v0: p_c.as_slice().iter().map(|p| p.sqrt()).collect(),
        theta_arr,
        theta_srv,
        ry_arr: ry_matrix(theta_arr),
        ry_srv: ry_matrix(theta_srv),
        post_arrival: nonzero(&st.after_arrival, &lay),
        post_update,
        fidelity: fidelity(&p_q, &p_c)?,
        p_slice,
        shots,
        seed: seed_value,
        p_q,
        p_c,
        table,
        tv_halved,
        l1_gap,
    })
}

impl DemoReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let m = |r: &[[f64; 2]; 2]| format!("[[{:.4}, {:.4}], [{:.4}, {:.4}]]", r[0][0], r[0][1], r[1][0], r[1][1]);
        let _ = writeln!(s, "lambda = {}, mu = {}, dt = {}, K = {}", self.lambda, self.mu, self.dt, self.p_c.len() - 1);
        let _ = writeln!(s, "p_arr = {:.4}, p_srv = {:.4}", self.p_arrival, self.p_service);
        let v0: Vec<String> = self.v0.iter().map(|x| format!("{x:.4}")).collect();
        let _ = writeln!(s, "v0 = [{}]", v0.join(", "));
        let _ = writeln!(s, "theta_arr = {:.4}", self.theta_arr);
        let _ = writeln!(s, "R_Y(theta_arr) = {}", m(&self.ry_arr));
        let _ = writeln!(s, "theta_srv = {:.4}", self.theta_srv);
        let _ = writeln!(s, "R_Y(theta_srv) = {}", m(&self.ry_srv));
        let _ = writeln!(s, "after arrival rotation (|q1q0;a_a a_s f>):");
        for a in &self.post_arrival {
            let _ = writeln!(s, "  {} {:+.4}", a.label(), a.amplitude);
        }
        let _ = writeln!(s, "after INC/DEC:");
        for a in &self.post_update {
            let _ = writeln!(s, "  {} {:+.4}", a.label(), a.amplitude);
        }
        let _ = writeln!(s, "{} shots, seed {}", self.shots, self.seed);
        let _ = writeln!(s, "n  P_q     P_c     |P_q - P_c|");
        for r in &self.table {
            let _ = writeln!(s, "{}  {:.4}  {:.4}  {:.4}", r.n, r.p_q, r.p_c, r.gap);
        }
        let _ = writeln!(s, "TV (halved) = {:.4}", self.tv_halved);
        let _ = writeln!(s, "L1 gap      = {:.4}", self.l1_gap);
        let _ = writeln!(s, "fidelity    = {:.4}", self.fidelity);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn demo_values() {
        let r = demo_report(10_000, 2024).unwrap();
        assert_abs_diff_eq!(r.theta_arr, 0.5443, epsilon = 1e-4);
        assert_abs_diff_eq!(r.theta_srv, 1.0683, epsilon = 1e-4);
        assert_abs_diff_eq!(r.ry_arr[1][0], 0.2688, epsilon = 5e-4);
        assert_abs_diff_eq!(r.ry_srv[0][0], 0.8607, epsilon = 5e-4);
        assert_eq!(r.post_arrival.len(), 8);
        assert_abs_diff_eq!(r.post_arrival[0].amplitude, 0.8358, epsilon = 5e-4);
        assert_abs_diff_eq!(r.l1_gap, 2.0 * r.tv_halved, epsilon = 1e-15);
        let text = r.render();
        assert!(text.contains("theta_arr = 0.5443"));
        assert!(text.contains("|00;000> +0.8358"));
    }
}
