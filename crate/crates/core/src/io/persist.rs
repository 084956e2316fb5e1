//! Text and binary persistence for LID profiles, layer assignments, ground
//! truth and index snapshots. Every loader validates what it reads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::vecs;
use crate::error::{Error, Result};
use crate::graph::HnswIndex;
use crate::lid::{LayerAssignment, LidProfile, Placement};
use crate::oracle::GroundTruth;

const PROFILE_HEADER: &str = "label,raw_lid,normalized_lid";
const ASSIGNMENT_HEADER: &str = "label,layer,branch";

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::at_line(line, format!("invalid {what} `{s}`")))
}

pub fn profile_to_string(p: &LidProfile) -> String {
    let mut s = String::with_capacity(p.len() * 48);
    s.push_str(PROFILE_HEADER);
    s.push('\n');
    for (i, (r, n)) in p.raw_lids.iter().zip(&p.normalized_lids).enumerate() {
        let _ = writeln!(s, "{i},{r},{n}");
    }
    let _ = writeln!(s, "#k_used={}", p.k_used);
    let degenerate: Vec<String> = p.degenerate.iter().map(u32::to_string).collect();
    let _ = writeln!(s, "#degenerate={}", degenerate.join(";"));
    let _ = writeln!(s, "#avg_distance={}", p.avg_distance);
    s
}

pub fn parse_profile(text: &str) -> Result<LidProfile> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PROFILE_HEADER => {}
        _ => return Err(Error::at_line(1, format!("expected header `{PROFILE_HEADER}`"))),
    }
    let mut raw = Vec::new();
    let mut normalized = Vec::new();
    let (mut k_used, mut avg, mut degenerate) = (None, None, Vec::new());
    for (i, line) in lines {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let (key, value) = comment
                .split_once('=')
                .ok_or_else(|| Error::at_line(no, "comment without `key=value`"))?;
            match key.trim() {
                "k_used" => k_used = Some(parse_field::<usize>(value, no, "k_used")?),
                "avg_distance" => avg = Some(parse_field::<f64>(value, no, "avg_distance")?),
                "degenerate" => {
                    degenerate = value
                        .split(';')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_field::<u32>(s, no, "label"))
                        .collect::<Result<_>>()?;
                }
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::at_line(no, "expected 3 comma-separated fields"));
        }
        let label: usize = parse_field(fields[0], no, "label")?;
        if label != raw.len() {
            return Err(Error::at_line(no, format!("expected label {}, got {label}", raw.len())));
        }
        raw.push(parse_field::<f64>(fields[1], no, "raw LID")?);
        normalized.push(parse_field::<f64>(fields[2], no, "normalized LID")?);
    }
    let avg = avg.ok_or_else(|| Error::at_line(text.lines().count(), "missing #avg_distance trailer"))?;
    let profile = LidProfile {
        raw_lids: raw,
        normalized_lids: normalized,
        k_used: k_used.unwrap_or(crate::lid::DEFAULT_LID_K),
        avg_distance: avg,
        degenerate,
    };
    profile.validate()?;
    Ok(profile)
}

pub fn save_profile(path: impl AsRef<Path>, p: &LidProfile) -> Result<()> {
    Ok(fs::write(path, profile_to_string(p))?)
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<LidProfile> {
    parse_profile(&fs::read_to_string(path)?)
}

/// Rows are written in insertion order so the order survives a round trip.
pub fn assignment_to_string(a: &LayerAssignment) -> String {
    let mut s = format!("#branches={}\n{ASSIGNMENT_HEADER}\n", a.branch_count());
    for &label in a.order() {
        let p = a.get(label).expect("order covers labels");
        let _ = writeln!(s, "{label},{},{}", p.layer, p.branch);
    }
    s
}

pub fn parse_assignment(text: &str) -> Result<LayerAssignment> {
    let mut lines = text.lines().enumerate();
    let branch_count = match lines.next() {
        Some((_, l)) => match l.trim().strip_prefix("#branches=") {
            Some(v) => parse_field::<usize>(v, 1, "branch count")?,
            None => return Err(Error::at_line(1, "expected `#branches=<n>`")),
        },
        None => return Err(Error::at_line(1, "empty assignment file")),
    };
    match lines.next() {
        Some((_, h)) if h.trim() == ASSIGNMENT_HEADER => {}
        _ => return Err(Error::at_line(2, format!("expected header `{ASSIGNMENT_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::at_line(no, "expected 3 comma-separated fields"));
        }
        let label: u32 = parse_field(fields[0], no, "label")?;
        let layer: u8 = parse_field(fields[1], no, "layer")?;
        let branch: u8 = parse_field(fields[2], no, "branch")?;
        rows.push((no, label, Placement { layer, branch }));
    }
    let n = rows.len();
    let mut placements = vec![None; n];
    let mut order = Vec::with_capacity(n);
    for (no, label, p) in rows {
        match placements.get_mut(label as usize) {
            Some(slot @ None) => *slot = Some(p),
            _ => return Err(Error::at_line(no, format!("label {label} out of range or repeated"))),
        }
        order.push(label);
    }
    let placements = placements.into_iter().map(|p| p.expect("filled")).collect();
    LayerAssignment::new(placements, order, branch_count)
}

pub fn save_assignment(path: impl AsRef<Path>, a: &LayerAssignment) -> Result<()> {
    Ok(fs::write(path, assignment_to_string(a))?)
}

pub fn load_assignment(path: impl AsRef<Path>) -> Result<LayerAssignment> {
    parse_assignment(&fs::read_to_string(path)?)
}

/// Ground-truth body: an ivecs block of labels followed by an fvecs block of distances.
pub fn encode_ground_truth(gt: &GroundTruth) -> Vec<u8> {
    let mut out = vecs::encode_ivecs(&gt.labels);
    for row in &gt.distances {
        out.extend_from_slice(&(row.len() as u32).to_le_bytes());
        for d in row {
            out.extend_from_slice(&d.to_le_bytes());
        }
    }
    out
}

pub fn ground_truth_sidecar(gt: &GroundTruth) -> String {
    format!(
        "k_gt={} queries={} base_checksum={} query_checksum={}\n",
        gt.k_gt,
        gt.len(),
        gt.base_checksum,
        gt.query_checksum
    )
}

pub fn decode_ground_truth(body: &[u8], sidecar: &str) -> Result<GroundTruth> {
    let mut k_gt = None;
    let mut queries = None;
    let mut base_checksum = None;
    let mut query_checksum = None;
    for tok in sidecar.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::at_line(1, format!("bad sidecar token `{tok}`")))?;
        match k {
            "k_gt" => k_gt = Some(parse_field::<usize>(v, 1, "k_gt")?),
            "queries" => queries = Some(parse_field::<usize>(v, 1, "queries")?),
            "base_checksum" => base_checksum = Some(v.to_string()),
            "query_checksum" => query_checksum = Some(v.to_string()),
            _ => {}
        }
    }
    let missing = |what: &str| Error::at_line(1, format!("sidecar lacks {what}"));
    let k_gt = k_gt.ok_or_else(|| missing("k_gt"))?;
    let queries = queries.ok_or_else(|| missing("queries"))?;
    let record = 4 + 4 * k_gt;
    let expected = queries
        .checked_mul(2 * record)
        .ok_or_else(|| Error::at_byte(0, "declared size overflows"))?;
    if body.len() != expected {
        return Err(Error::at_byte(
            body.len().min(expected),
            format!("expected {expected} bytes for {queries} queries of k_gt = {k_gt}, found {}", body.len()),
        ));
    }
    let (label_block, dist_block) = body.split_at(queries * record);
    let labels = vecs::parse_ivecs(label_block)?;
    let distances = vecs::parse_fvecs(dist_block)?;
    let check_width = |w: usize, offset: usize| {
        if queries > 0 && w != k_gt {
            Err(Error::at_byte(offset, format!("record width {w} does not match k_gt = {k_gt}")))
        } else {
            Ok(())
        }
    };
    check_width(labels.first().map_or(k_gt, Vec::len), 0)?;
    check_width(distances.dim().max(if queries == 0 { k_gt } else { 0 }), queries * record)?;
    let gt = GroundTruth {
        k_gt,
        labels,
        distances: distances.iter().take(distances.len()).map(<[f32]>::to_vec).collect(),
        base_checksum: base_checksum.ok_or_else(|| missing("base_checksum"))?,
        query_checksum: query_checksum.ok_or_else(|| missing("query_checksum"))?,
    };
    gt.validate()?;
    Ok(gt)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_ground_truth(path: impl AsRef<Path>, gt: &GroundTruth) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ground_truth(gt))?;
    fs::write(sidecar_path(path), ground_truth_sidecar(gt))?;
    Ok(())
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let body = fs::read(path)?;
    let sidecar = fs::read_to_string(sidecar_path(path))?;
    decode_ground_truth(&body, &sidecar)
}

pub fn save_snapshot(path: impl AsRef<Path>, index: &HnswIndex) -> Result<()> {
    Ok(fs::write(path, index.to_snapshot_bytes()?)?)
}

pub fn load_snapshot(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<HnswIndex> {
    HnswIndex::from_snapshot_bytes(&fs::read(path)?, expected_dim)
}
