//! Inline syntax for points, item sets and integer ranges.

/// `0.25`, `1/3` or `2e-3`.
pub fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
            if b == 0.0 {
                return Err(format!("zero denominator in `{s}`"));
            }
            a / b
        }
        None => s.parse().map_err(|_| format!("not a number: `{s}`"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: `{s}`"))
    }
}

fn list_body(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('[').and_then(|t| t.strip_suffix(']')).unwrap_or(s)
}

/// `uniform:<c>` or `list:[c1, c2, ...]`, expanded to length n.
pub fn vector(s: &str, n: usize) -> Result<Vec<f64>, String> {
    if let Some(c) = s.strip_prefix("uniform:") {
        return Ok(vec![number(c)?; n]);
    }
    let body = s.strip_prefix("list:").ok_or_else(|| format!("expected uniform:<c> or list:[...], got `{s}`"))?;
    let body = list_body(body);
    let v: Vec<f64> = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',').map(number).collect::<Result<_, _>>()?
    };
    if v.len() != n {
        return Err(format!("list has {} entries, instance has {n}", v.len()));
    }
    Ok(v)
}

/// `[0,2,5]`, `0,2,5` or `[]`.
pub fn index_list(s: &str) -> Result<Vec<usize>, String> {
    let body = list_body(s);
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad index `{}`", t.trim())))
        .collect()
}

/// `3`, `1..20` (inclusive) or `1,2,5`.
pub fn int_range(s: &str) -> Result<Vec<u64>, String> {
    let p = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad integer `{}`", t.trim()));
    let v: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (p(a)?, p(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range `{s}`"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(p).collect::<Result<_, _>>()?
    };
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(number("1/4").unwrap(), 0.25);
        assert_eq!(number(" 0.5 ").unwrap(), 0.5);
        assert!(number("1/0").is_err());
        assert!(number("x").is_err());
        assert!(number("inf").is_err());
    }

    #[test]
    fn vectors() {
        assert_eq!(vector("uniform:1/2", 3).unwrap(), vec![0.5; 3]);
        assert_eq!(vector("list:[0.1, 1/4]", 2).unwrap(), vec![0.1, 0.25]);
        assert_eq!(vector("list:0.1,0.2", 2).unwrap(), vec![0.1, 0.2]);
        assert!(vector("list:[0.1]", 2).is_err());
        assert!(vector("0.1", 1).is_err());
    }

    #[test]
    fn sets_and_ranges() {
        assert_eq!(index_list("[0, 3]").unwrap(), vec![0, 3]);
        assert_eq!(index_list("[]").unwrap(), Vec::<usize>::new());
        assert_eq!(int_range("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(int_range("1..=2").unwrap(), vec![1, 2]);
        assert_eq!(int_range("5,7").unwrap(), vec![5, 7]);
        assert!(int_range("4..1").is_err());
    }
}
