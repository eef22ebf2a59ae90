//! Value lists on the command line: `a,b,c` or inclusive `start:stop:step`.

use crate::Failure;

fn number(s: &str) -> Result<f64, Failure> {
    let s = s.trim();
    match s {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| Failure::usage(format!("not a number: {s:?}"))),
    }
}

/// Rounds away float noise such as 0.30000000000000004 from range steps.
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

pub fn parse_values(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let out = match parts.as_slice() {
        [single] => single.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
        [a, b, step] => {
            let (a, b, step) = (number(a)?, number(b)?, number(step)?);
            if !(step > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                return Err(Failure::usage(format!("bad range {spec:?}")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| tidy(a + i as f64 * step)).collect()
        }
        _ => return Err(Failure::usage(format!("bad value list {spec:?}"))),
    };
    if out.is_empty() || out.iter().any(|v| v.is_nan()) {
        return Err(Failure::usage(format!("bad value list {spec:?}")));
    }
    Ok(out)
}
