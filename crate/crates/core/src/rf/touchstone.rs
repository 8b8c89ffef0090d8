//! Touchstone v1 one-port (`.s1p`) reader.

use std::sync::Arc;

use num_complex::Complex64;

use super::{check_grid, RfError, SweepTrace, TraceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Real / imaginary.
    RealImag,
    /// Linear magnitude / angle in degrees.
    MagAngle,
    /// 20·log10 magnitude / angle in degrees.
    DbAngle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionLine {
    pub freq_scale: f64,
    pub format: DataFormat,
    pub z_ref: f64,
}

impl OptionLine {
    pub fn parse(line: &str) -> Result<Self, RfError> {
        let body = line
            .trim_start()
            .strip_prefix('#')
            .ok_or_else(|| RfError::MalformedHeader(format!("not an option line: {line:?}")))?;
        let mut freq_scale = None;
        let mut format = None;
        let mut param = None;
        let mut z_ref = None;
        let mut tokens = body.split_whitespace();
        while let Some(tok) = tokens.next() {
            match tok.to_ascii_uppercase().as_str() {
                "HZ" => set_once(&mut freq_scale, 1.0, tok)?,
                "KHZ" => set_once(&mut freq_scale, 1e3, tok)?,
                "MHZ" => set_once(&mut freq_scale, 1e6, tok)?,
                "GHZ" => set_once(&mut freq_scale, 1e9, tok)?,
                "RI" => set_once(&mut format, DataFormat::RealImag, tok)?,
                "MA" => set_once(&mut format, DataFormat::MagAngle, tok)?,
                "DB" => set_once(&mut format, DataFormat::DbAngle, tok)?,
                "S" => set_once(&mut param, 'S', tok)?,
                "Y" | "Z" | "H" | "G" => {
                    return Err(RfError::UnsupportedFormat(format!("{tok}-parameters")));
                }
                "R" => {
                    let v = tokens
                        .next()
                        .ok_or_else(|| RfError::MalformedHeader("R without a value".into()))?;
                    let r: f64 = v
                        .parse()
                        .map_err(|_| RfError::MalformedHeader(format!("bad reference {v:?}")))?;
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(RfError::MalformedHeader(format!("bad reference {v:?}")));
                    }
                    set_once(&mut z_ref, r, "R")?;
                }
                _ => return Err(RfError::MalformedHeader(format!("unknown option {tok:?}"))),
            }
        }
        // Touchstone v1 defaults for omitted fields.
        Ok(Self {
            freq_scale: freq_scale.unwrap_or(1e9),
            format: format.unwrap_or(DataFormat::MagAngle),
            z_ref: z_ref.unwrap_or(50.0),
        })
    }

    fn to_complex(&self, a: f64, b: f64) -> Complex64 {
        match self.format {
            DataFormat::RealImag => Complex64::new(a, b),
            DataFormat::MagAngle => Complex64::from_polar(a, b.to_radians()),
            DataFormat::DbAngle => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }
}

fn set_once<T>(slot: &mut Option<T>, v: T, tok: &str) -> Result<(), RfError> {
    if slot.is_some() {
        return Err(RfError::MalformedHeader(format!("duplicate option {tok:?}")));
    }
    *slot = Some(v);
    Ok(())
}

/// `1 + 2n²` numbers per row is an n-port record.
fn multiport_arity(count: usize) -> Option<usize> {
    (2..=64).find(|n| 1 + 2 * n * n == count)
}

/// Parses one-port Touchstone v1 content.
///
/// The option line must precede the first data row; later option lines are
/// ignored as the format prescribes. Frequencies come back in Hz and every
/// point is converted to real/imaginary form.
pub fn parse_touchstone(bytes: &[u8]) -> Result<SweepTrace, RfError> {
    let text = std::str::from_utf8(bytes).map_err(|_| RfError::InvalidEncoding)?;
    let mut options: Option<OptionLine> = None;
    let mut freqs = Vec::new();
    let mut gamma = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('!') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            return Err(RfError::UnsupportedFormat(format!("Touchstone v2 keyword at line {line_no}")));
        }
        if line.starts_with('#') {
            if options.is_none() {
                options = Some(OptionLine::parse(line)?);
            }
            continue;
        }
        let opts = options.ok_or_else(|| {
            RfError::MalformedHeader(format!("data before option line at line {line_no}"))
        })?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            if multiport_arity(tokens.len()).is_some() {
                return Err(RfError::UnsupportedFormat(format!(
                    "{}-number rows (multi-port) at line {line_no}",
                    tokens.len()
                )));
            }
            return Err(RfError::ArityError { line: line_no, found: tokens.len() });
        }
        let mut nums = [0.0f64; 3];
        for (slot, tok) in nums.iter_mut().zip(&tokens) {
            let v: f64 = tok
                .parse()
                .map_err(|_| RfError::InvalidNumber { line: line_no, token: (*tok).to_string() })?;
            if !v.is_finite() {
                return Err(RfError::InvalidNumber { line: line_no, token: (*tok).to_string() });
            }
            *slot = v;
        }
        let f = nums[0] * opts.freq_scale;
        if !(f > 0.0) || freqs.last().is_some_and(|&prev| f <= prev) {
            return Err(RfError::NonMonotoneFrequencies { line: line_no });
        }
        freqs.push(f);
        gamma.push(opts.to_complex(nums[1], nums[2]));
    }

    let opts = options.ok_or_else(|| RfError::MalformedHeader("missing option line".into()))?;
    if freqs.is_empty() {
        return Err(RfError::MalformedHeader("no data rows".into()));
    }
    debug_assert!(check_grid(&freqs).is_ok());
    let grid: Arc<[f64]> = freqs.into();
    Ok(SweepTrace::new(grid, gamma, opts.z_ref, false)?
        .with_meta(TraceMeta { source: "touchstone".into(), seed: None }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz_ri_single_row() {
        let t = parse_touchstone(b"# GHz S RI R 50\n1.0 0.2 0.0\n").unwrap();
        assert_eq!(t.frequencies(), &[1e9]);
        assert_eq!(t.gamma(), &[Complex64::new(0.2, 0.0)]);
        assert_eq!(t.z_ref(), 50.0);
    }

    #[test]
    fn mhz_ma_half_turn() {
        let t = parse_touchstone(b"# MHz S MA R 50\n500 1.0 180\n").unwrap();
        assert_eq!(t.frequencies(), &[500e6]);
        let g = t.gamma()[0];
        assert!((g - Complex64::new(-1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn comments_and_defaults() {
        let src = "! header comment\n#\n1 0.5 90 ! inline\n2 0.25 0\n";
        let t = parse_touchstone(src.as_bytes()).unwrap();
        assert_eq!(t.frequencies(), &[1e9, 2e9]);
        assert!((t.gamma()[0] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert_eq!(t.z_ref(), 50.0);
    }

    #[test]
    fn db_format() {
        let t = parse_touchstone(b"# Hz S DB R 75\n10 -6.020599913279624 0\n").unwrap();
        assert!((t.gamma()[0].re - 0.5).abs() < 1e-12);
        assert_eq!(t.z_ref(), 75.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_touchstone(b""), Err(RfError::MalformedHeader(_))));
        assert!(matches!(parse_touchstone(b"# GHz S RI R 50\n"), Err(RfError::MalformedHeader(_))));
        assert!(matches!(parse_touchstone(b"1 2 3\n"), Err(RfError::MalformedHeader(_))));
        assert!(matches!(parse_touchstone(b"# GHz S XX R 50\n"), Err(RfError::MalformedHeader(_))));
        assert!(matches!(
            parse_touchstone(b"# GHz S RI R 50\n2 0 0\n1 0 0\n"),
            Err(RfError::NonMonotoneFrequencies { line: 3 })
        ));
        assert!(matches!(
            parse_touchstone(b"# GHz S RI R 50\n1 0 0 4\n"),
            Err(RfError::ArityError { line: 2, found: 4 })
        ));
        assert!(matches!(
            parse_touchstone(b"# GHz S RI R 50\n1 0 0 0 0 0 0 0 0\n"),
            Err(RfError::UnsupportedFormat(_))
        ));
        assert!(matches!(parse_touchstone(b"# GHz Z RI R 50\n"), Err(RfError::UnsupportedFormat(_))));
        assert!(matches!(parse_touchstone(&[0xff, 0xfe]), Err(RfError::InvalidEncoding)));
        assert!(matches!(
            parse_touchstone(b"# GHz S RI R 50\n1 abc 0\n"),
            Err(RfError::InvalidNumber { line: 2, .. })
        ));
    }

    #[test]
    fn later_option_lines_ignored() {
        let t = parse_touchstone(b"# GHz S RI R 50\n1 0.1 0\n# MHz S MA R 75\n2 0.1 0\n").unwrap();
        assert_eq!(t.frequencies(), &[1e9, 2e9]);
        assert_eq!(t.z_ref(), 50.0);
    }
}
