//! CSV writers. Floats use Rust's shortest round-trip formatting, so the
//! output is locale-independent and byte-stable.

use std::io::Write;

use anyhow::Result;
use silly_rules::{AggregateRow, Table, Trajectory, VpiReport};

pub const AGGREGATE_HEADER: [&str; 7] =
    ["preset", "d", "c", "timestep", "surviving_fraction", "mean_active_size", "n_groups"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["group_id", "timestep", "active_count", "collapsed"];
pub const VPI_HEADER: [&str; 12] =
    ["alpha0", "beta0", "k", "m", "d", "gamma", "c", "R", "self_type", "e_clipped", "v_partial", "vpi"];
pub const POLICY_HEADER: [&str; 3] = ["depth", "retire_below_k", "boundary_posterior_mean"];

pub fn write_aggregate<'a, W: Write>(
    out: W,
    preset: &str,
    rows: impl IntoIterator<Item = &'a AggregateRow<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            preset.to_string(),
            r.density.to_string(),
            r.cost.to_string(),
            r.timestep.to_string(),
            r.surviving_fraction.to_string(),
            r.mean_active_size.to_string(),
            r.n_groups.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `prefix` columns (e.g. cell coordinates) precede the trajectory columns.
pub fn write_trajectories<'a, W: Write>(
    out: W,
    prefix_header: &[&str],
    groups: impl IntoIterator<Item = (Vec<String>, u32, &'a Trajectory<f64>)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(prefix_header.iter().copied().chain(TRAJECTORY_HEADER))?;
    for (prefix, id, t) in groups {
        for s in &t.samples {
            let mut rec = prefix.clone();
            rec.extend([id.to_string(), s.timestep.to_string(), s.active_count.to_string(), s.collapsed.to_string()]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_vpi<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (&'a silly_rules::Params, silly_rules::AgentType, &'a VpiReport<f64>)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VPI_HEADER)?;
    for (p, ty, r) in rows {
        w.write_record([
            r.belief.prior_alpha.to_string(),
            r.belief.prior_beta.to_string(),
            r.belief.k.to_string(),
            r.belief.m.to_string(),
            p.density.to_string(),
            p.discount.to_string(),
            p.signaling_cost.to_string(),
            p.reward.to_string(),
            ty.to_string(),
            r.full_info_component.to_string(),
            r.partial_info_value.to_string(),
            r.vpi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_policy<W: Write>(out: W, table: &Table, max_depth: Option<u32>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POLICY_HEADER)?;
    let p = table.params();
    let last = max_depth.map_or(table.horizon(), |d| d.min(table.horizon()));
    for n in 0..=last {
        let k = table.threshold(n).expect("depth within horizon");
        let boundary = if k <= n {
            ((p.prior_alpha + f64::from(k)) / (p.prior_alpha + p.prior_beta + f64::from(n))).to_string()
        } else {
            String::new()
        };
        w.write_record([n.to_string(), k.to_string(), boundary])?;
    }
    w.flush()?;
    Ok(())
}
