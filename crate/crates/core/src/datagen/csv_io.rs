use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DatagenError, Episode, Result};
use crate::types::{Trajectory, TrajectoryPoint};

pub const CSV_HEADER: [&str; 10] = ["vehicle_id", "t", "x", "y", "v", "a", "length", "width", "lane_id", "unit"];
pub const FEET_TO_METERS: f64 = 0.3048;
/// Speeds above this (m/s) almost certainly mean a mislabeled unit.
pub const MAX_PLAUSIBLE_SPEED: f64 = 70.0;

/// Which vehicle ids play the host, target and front roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMap {
    pub host: u64,
    pub target: u64,
    pub front: Option<u64>,
}

/// Writes an episode in long format, one row per vehicle and time step.
/// Vehicle ids are the role indices.
pub fn write_episode_csv<W: Write>(episode: &Episode, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for (id, tr) in episode.trajectories.iter().enumerate() {
        let lane = if id == 0 { "1" } else { "0" };
        for p in tr.points() {
            w.write_record([
                id.to_string(),
                p.t.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                p.v.to_string(),
                p.a.to_string(),
                tr.length().to_string(),
                tr.width().to_string(),
                lane.to_string(),
                "m".to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Row {
    t: f64,
    x: f64,
    y: f64,
    v: f64,
    a: f64,
    length: f64,
    width: f64,
}

fn field<'a>(rec: &'a csv::StringRecord, cols: &BTreeMap<&str, usize>, name: &str, line: u64) -> Result<&'a str> {
    let s = cols.get(name).and_then(|&i| rec.get(i)).map(str::trim).unwrap_or("");
    if s.is_empty() {
        return Err(DatagenError::Parse { line, column: name.into(), message: "missing value".into() });
    }
    Ok(s)
}

fn number(rec: &csv::StringRecord, cols: &BTreeMap<&str, usize>, name: &str, line: u64) -> Result<f64> {
    let s = field(rec, cols, name, line)?;
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DatagenError::Parse { line, column: name.into(), message: format!("`{s}` is not a finite number") }),
    }
}

fn interpolate(rows: &[Row], t: f64) -> TrajectoryPoint {
    let k = rows.partition_point(|r| r.t < t - 1e-9);
    let b = &rows[k.min(rows.len() - 1)];
    if (b.t - t).abs() <= 1e-9 || k == 0 {
        return TrajectoryPoint::new(t, b.x, b.y, b.v, b.a);
    }
    let a = &rows[k - 1];
    let f = (t - a.t) / (b.t - a.t);
    let lerp = |p: f64, q: f64| p + f * (q - p);
    TrajectoryPoint::new(t, lerp(a.x, b.x), lerp(a.y, b.y), lerp(a.v, b.v).max(0.0), lerp(a.a, b.a))
}

/// Reads one episode from a long-format trajectory CSV, converting feet to
/// meters and resampling every vehicle to `dt` over the common time range.
///
/// Without a role map, vehicles are assigned host, target, front in
/// ascending id order.
pub fn ingest_csv<R: Read>(reader: R, dt: f64, roles: Option<&RoleMap>) -> Result<Episode> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: BTreeMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    for required in ["vehicle_id", "t", "x", "y", "v", "a", "length", "width"] {
        if !cols.contains_key(required) {
            return Err(DatagenError::Parse { line: 1, column: required.into(), message: "column missing from header".into() });
        }
    }

    let mut vehicles: BTreeMap<u64, Vec<Row>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id_str = field(&rec, &cols, "vehicle_id", line)?;
        let id = id_str.parse::<u64>().map_err(|_| DatagenError::Parse {
            line,
            column: "vehicle_id".into(),
            message: format!("`{id_str}` is not a vehicle id"),
        })?;
        let scale = match cols.get("unit").and_then(|&i| rec.get(i)).map(str::trim).unwrap_or("m") {
            "m" | "" => 1.0,
            "ft" => FEET_TO_METERS,
            other => {
                return Err(DatagenError::Parse { line, column: "unit".into(), message: format!("unknown unit `{other}`") })
            }
        };
        let num = |name: &str| number(&rec, &cols, name, line);
        let row = Row {
            t: num("t")?,
            x: num("x")? * scale,
            y: num("y")? * scale,
            v: num("v")? * scale,
            a: num("a")? * scale,
            length: num("length")? * scale,
            width: num("width")? * scale,
        };
        if row.v.abs() > MAX_PLAUSIBLE_SPEED {
            return Err(DatagenError::Unit { line, speed: row.v });
        }
        vehicles.entry(id).or_default().push(row);
    }

    let order: Vec<u64> = match roles {
        Some(r) => [Some(r.host), Some(r.target), r.front].into_iter().flatten().collect(),
        None => vehicles.keys().copied().take(3).collect(),
    };
    if order.len() < 2 {
        return Err(DatagenError::ConfigInvalid("trajectory file needs at least two vehicles".into()));
    }
    let mut tracks = Vec::with_capacity(order.len());
    for id in &order {
        let mut rows = vehicles
            .remove(id)
            .ok_or_else(|| DatagenError::ConfigInvalid(format!("vehicle {id} not found in trajectory file")))?;
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        if rows.windows(2).any(|w| w[1].t - w[0].t <= 1e-9) {
            return Err(DatagenError::ConfigInvalid(format!("vehicle {id} has duplicate timestamps")));
        }
        tracks.push(rows);
    }

    let t_start = tracks.iter().map(|r| r[0].t).fold(f64::NEG_INFINITY, f64::max);
    let t_end = tracks.iter().map(|r| r[r.len() - 1].t).fold(f64::INFINITY, f64::min);
    let i0 = (t_start / dt - 1e-6).ceil() as i64;
    let i1 = (t_end / dt + 1e-6).floor() as i64;
    if i1 - i0 < 1 {
        return Err(DatagenError::EpisodeTooShort { duration: (t_end - t_start).max(0.0), needed: dt });
    }

    let trajectories = tracks
        .iter()
        .map(|rows| {
            let pts = (i0..=i1).map(|i| interpolate(rows, i as f64 * dt)).collect();
            Trajectory::new(pts, dt, rows[0].length, rows[0].width)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Episode::from_trajectories(0, trajectories)
}
