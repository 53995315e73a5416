//! Run files: the native text format (exact round trip) and the
//! whitespace-separated dead-birth format used by external samplers.
//!
//! Native layout:
//!
//! ```text
//! # nsrun version=1 dim=2 points=3
//! # meta likelihood=gaussian(2)
//! 0.25 -1.5 -3.2 -inf
//! 1.0e-7 0.5 -2.1 -3.2
//! ...
//! ```
//!
//! Each record is `theta_1 .. theta_d loglike birth_loglike`, written with
//! the shortest decimal representation that parses back to the same bits
//! (exponent notation for very large or small magnitudes).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::run::{sort_points, Meta, NsRun, SamplePoint};

pub const NATIVE_VERSION: u32 = 1;
const HEADER_TAG: &str = "# nsrun";
const META_TAG: &str = "# meta ";
/// Birth value written for points sampled from the prior in dead-birth
/// exports.
pub const DEFAULT_PRIOR_SENTINEL: f64 = -1e30;

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(value: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(value.len());
    let mut chars = value.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

fn push_record(out: &mut String, p: &SamplePoint, birth: f64) {
    for x in &p.params {
        let _ = write!(out, "{x:?} ");
    }
    let _ = writeln!(out, "{:?} {:?}", p.loglike, birth);
}

/// Serialises a run; empty runs cannot be represented.
pub fn write_native(run: &NsRun) -> Result<String> {
    if run.is_empty() {
        return Err(Error::EmptyRun);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{HEADER_TAG} version={NATIVE_VERSION} dim={} points={}",
        run.dim(),
        run.len()
    );
    for (key, value) in run.meta() {
        if key.is_empty() || key.contains(|c: char| c == '=' || c.is_whitespace()) {
            return Err(Error::InvalidArgument(format!("meta key {key:?} cannot be written")));
        }
        let _ = writeln!(out, "{META_TAG}{key}={}", escape(value));
    }
    for p in run.points() {
        push_record(&mut out, p, p.birth_loglike);
    }
    Ok(out)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_float(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("not a number: {tok:?}")))
}

/// Position (in sorted order) that a run-construction error refers to.
fn error_index(err: &Error) -> Option<usize> {
    match *err {
        Error::TiedLoglike { index, .. }
        | Error::NonFinite { index, .. }
        | Error::BirthNotBelow { index }
        | Error::Unsorted { index }
        | Error::BirthContourMissing { index }
        | Error::BirthChainAmbiguous { index } => Some(index),
        _ => None,
    }
}

/// Rewrites an error about sorted point `k` as a parse error on the line
/// that point came from.
fn at_line(err: Error, lines: &[usize]) -> Error {
    match error_index(&err).and_then(|k| lines.get(k)) {
        Some(&line) => parse_err(line, err.to_string()),
        None => err,
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let rest = line
        .strip_prefix(HEADER_TAG)
        .ok_or_else(|| parse_err(lineno, "missing '# nsrun' header"))?;
    let (mut version, mut dim, mut points) = (None, None, None);
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, format!("bad header field {field:?}")))?;
        let number = || {
            value
                .parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("bad header value {field:?}")))
        };
        match key {
            "version" => version = Some(number()?),
            "dim" => dim = Some(number()?),
            "points" => points = Some(number()?),
            _ => {}
        }
    }
    let version = version.ok_or_else(|| parse_err(lineno, "header has no version"))?;
    if version != NATIVE_VERSION as usize {
        return Err(Error::Version {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: NATIVE_VERSION,
        });
    }
    Ok((
        dim.ok_or_else(|| parse_err(lineno, "header has no dim"))?,
        points.ok_or_else(|| parse_err(lineno, "header has no points count"))?,
    ))
}

/// Parses a native run file; the inverse of [`write_native`].
pub fn read_native(text: &str) -> Result<NsRun> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let (dim, count) = parse_header(header, hline)?;
    let mut meta = Meta::new();
    let mut points = Vec::with_capacity(count);
    let mut origin = Vec::with_capacity(count);
    for (lineno, line) in lines {
        if let Some(kv) = line.strip_prefix(META_TAG) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, "meta line needs key=value"))?;
            meta.insert(k.to_string(), unescape(v).map_err(|m| parse_err(lineno, m))?);
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != dim + 2 {
            return Err(parse_err(
                lineno,
                format!("expected {} columns, found {}", dim + 2, toks.len()),
            ));
        }
        let vals = toks
            .iter()
            .map(|t| parse_float(t, lineno))
            .collect::<Result<Vec<f64>>>()?;
        points.push(SamplePoint::new(vals[..dim].to_vec(), vals[dim], vals[dim + 1]));
        origin.push(lineno);
    }
    if points.len() != count {
        return Err(parse_err(
            hline,
            format!("header declares {count} points, file has {}", points.len()),
        ));
    }
    NsRun::from_sorted_points(points, meta).map_err(|e| at_line(e, &origin))
}

/// Dead-birth text: one `theta_1 .. theta_d loglike birth_loglike` line per
/// point, with prior births written as `sentinel`.
pub fn write_dead_birth(run: &NsRun, sentinel: f64) -> Result<String> {
    if run.is_empty() {
        return Err(Error::EmptyRun);
    }
    if !(sentinel.is_finite() && sentinel < run.points()[0].loglike) {
        return Err(Error::InvalidArgument(format!(
            "prior sentinel {sentinel} must be finite and below every loglike"
        )));
    }
    let mut out = String::new();
    for p in run.points() {
        let birth = if p.birth_loglike == f64::NEG_INFINITY {
            sentinel
        } else {
            p.birth_loglike
        };
        push_record(&mut out, p, birth);
    }
    Ok(out)
}

/// Builds a run from dead-birth text.
///
/// Births at or below the prior sentinel become `-inf`. Without an explicit
/// sentinel, the smallest birth value in the file is used when it lies
/// strictly below every loglike; otherwise no birth is treated as a prior
/// draw. Blank lines and `#` comments are skipped. Errors name the
/// offending line.
pub fn parse_dead_birth(text: &str, prior_sentinel: Option<f64>) -> Result<NsRun> {
    let mut points = Vec::new();
    let mut origin = Vec::new();
    let mut columns = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let ncol = *columns.get_or_insert(toks.len());
        if toks.len() != ncol {
            return Err(parse_err(
                lineno,
                format!("expected {ncol} columns, found {}", toks.len()),
            ));
        }
        if ncol < 3 {
            return Err(parse_err(lineno, "need at least one parameter, loglike and birth"));
        }
        let vals = toks
            .iter()
            .map(|t| parse_float(t, lineno))
            .collect::<Result<Vec<f64>>>()?;
        let (loglike, birth) = (vals[ncol - 2], vals[ncol - 1]);
        if !loglike.is_finite() {
            return Err(parse_err(lineno, format!("non-finite loglike {loglike}")));
        }
        if birth.is_nan() || birth >= loglike {
            return Err(parse_err(lineno, format!("birth {birth} is not below loglike {loglike}")));
        }
        points.push(SamplePoint::new(vals[..ncol - 2].to_vec(), loglike, birth));
        origin.push(lineno);
    }
    if points.is_empty() {
        return Err(Error::EmptyRun);
    }
    let sentinel = prior_sentinel.or_else(|| {
        let min_birth = points.iter().map(|p| p.birth_loglike).fold(f64::INFINITY, f64::min);
        let min_ll = points.iter().map(|p| p.loglike).fold(f64::INFINITY, f64::min);
        (min_birth < min_ll).then_some(min_birth)
    });
    if let Some(s) = sentinel {
        for p in &mut points {
            if p.birth_loglike <= s {
                p.birth_loglike = f64::NEG_INFINITY;
            }
        }
    }
    let (sorted, perm) = sort_points(points)?;
    let lines: Vec<usize> = perm.iter().map(|&k| origin[k]).collect();
    NsRun::from_sorted_points(sorted, Meta::new()).map_err(|e| at_line(e, &lines))
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_native_file(path: &Path, run: &NsRun) -> Result<()> {
    write_atomic(path, &write_native(run)?)
}

pub fn read_native_file(path: &Path) -> Result<NsRun> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_native(&text)
}

pub fn read_dead_birth_file(path: &Path, prior_sentinel: Option<f64>) -> Result<NsRun> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dead_birth(&text, prior_sentinel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::decompose_threads;
    use crate::sampler::{perfect_ns_gaussian, SamplerSettings};

    #[test]
    fn two_line_example() {
        let run = parse_dead_birth("0 1.0 -1e30\n0 2.0 1.0\n", None).unwrap();
        assert_eq!(run.len(), 2);
        assert_eq!(run.n_threads(), 1);
        assert_eq!(run.points()[0].birth_loglike, f64::NEG_INFINITY);
        assert_eq!(run.nlive(), &[1, 1]);
    }

    #[test]
    fn ragged_row_names_the_line() {
        let err = parse_dead_birth("0 1.0 -1e30\n\n0 2.0\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn chain_errors_name_the_line() {
        // the second point is born at a contour that no point has
        let err = parse_dead_birth("0 3.0 -1e30\n0 2.0 1.5\n0 1.0 -1e30\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_dead_birth("0 1.0 -1e30\n0 1.0 -1e30\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
        let err = parse_dead_birth("0 1.0 2.0\n", Some(-1e30)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn explicit_sentinel() {
        let run = parse_dead_birth("0 1.0 -5\n0 2.0 -5\n0 3.0 1.0\n", Some(-5.0)).unwrap();
        assert_eq!(run.n_threads(), 2);
        // the inferred sentinel is the smallest birth; other births must be contours
        assert_eq!(parse_dead_birth("0 1.0 0.5\n", None).unwrap().n_threads(), 1);
        assert!(parse_dead_birth("0 1.0 0.5\n0 2.0 1.5\n", None).is_err());
    }

    #[test]
    fn native_round_trip_is_bit_exact() {
        let run = perfect_ns_gaussian(3, &SamplerSettings::new(30, 4)).unwrap().with_meta("note", "a=b\nc\\d");
        let text = write_native(&run).unwrap();
        let back = read_native(&text).unwrap();
        assert_eq!(back, run);
        for (a, b) in back.points().iter().zip(run.points()) {
            assert_eq!(a.loglike.to_bits(), b.loglike.to_bits());
            for (x, y) in a.params.iter().zip(&b.params) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(write_native(&back).unwrap(), text);
    }

    #[test]
    fn native_version_and_empty() {
        let err = read_native("# nsrun version=2 dim=1 points=1\n0 1 -inf\n").unwrap_err();
        assert_eq!(err, Error::Version { found: 2, supported: 1 });
        assert!(matches!(read_native("0 1 -inf\n"), Err(Error::Parse { line: 1, .. })));
        let empty = NsRun::from_raw_parts(Vec::new(), Vec::new(), Vec::new(), Meta::new());
        assert_eq!(write_native(&empty), Err(Error::EmptyRun));
        let err = read_native("# nsrun version=1 dim=1 points=2\n0 1 -inf\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn dead_birth_round_trip() {
        let run = perfect_ns_gaussian(2, &SamplerSettings::new(25, 6)).unwrap();
        let text = write_dead_birth(&run, DEFAULT_PRIOR_SENTINEL).unwrap();
        let back = parse_dead_birth(&text, None).unwrap();
        assert_eq!(back.points(), run.points());
        assert_eq!(back.thread_labels(), run.thread_labels());
        assert_eq!(
            decompose_threads(&back).unwrap().len(),
            decompose_threads(&run).unwrap().len()
        );
        assert!(write_dead_birth(&run, 0.0).is_err());
    }

    #[test]
    fn atomic_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.run");
        let run = perfect_ns_gaussian(2, &SamplerSettings::new(10, 1)).unwrap();
        write_native_file(&path, &run).unwrap();
        assert_eq!(read_native_file(&path).unwrap(), run);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(read_native_file(&dir.path().join("missing")), Err(Error::Io(_))));
    }
}
