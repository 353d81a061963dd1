//! Text forms of risk functionals and scalarisers.
//!
//! Univariate: `worst`, `best`, `exp`, `var:A`, `cvar:A`, `dr:FILE.json`.
//! Multivariate: `id`, `cw:R1,R2,..`, `mvexp`, `mvworst`, `mvbest`,
//! `mvar:A`, `mvdr`, `pfstat:R`. A univariate spec given where a
//! multivariate one is expected is lifted: `worst`/`best` to the
//! component-wise extreme point, `exp` to the mean vector, `var:A` to MVaR
//! and anything else to the component-wise functional.

use std::path::Path;

use robustify::{Direction, DirectionGrid, MultiRisk, ScenarioDist, Scalariser, UniRisk};

pub type ParseResult<T> = Result<T, String>;

fn alpha(s: &str) -> ParseResult<f64> {
    let a: f64 = s.parse().map_err(|_| format!("bad level {s:?}"))?;
    if !(a > 0.0 && a < 1.0) {
        return Err(format!("alpha outside (0,1): {a}"));
    }
    Ok(a)
}

pub fn vector(s: &str) -> ParseResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad number {v:?} in {s:?}")))
        .collect()
}

pub fn uni(s: &str) -> ParseResult<UniRisk> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    match (head, rest) {
        ("worst", "") => Ok(UniRisk::worst()),
        ("best", "") => Ok(UniRisk::best()),
        ("exp", "") => Ok(UniRisk::Expectation),
        ("var", a) => Ok(UniRisk::VaR { alpha: alpha(a)? }),
        ("cvar", a) => Ok(UniRisk::CVaR { alpha: alpha(a)? }),
        ("dr", file) if !file.is_empty() => {
            let text = std::fs::read_to_string(Path::new(file)).map_err(|e| format!("{file}: {e}"))?;
            let family: Vec<ScenarioDist> = serde_json::from_str(&text).map_err(|e| format!("{file}: {e}"))?;
            if family.is_empty() {
                return Err(format!("{file}: empty distribution family"));
            }
            Ok(UniRisk::Dr { family })
        }
        _ => Err(format!("unknown univariate risk {s:?}")),
    }
}

/// Splits `cw:` arguments on commas that start a new functional.
fn split_components(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for part in s.split(',') {
        let starts_new = part.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        match out.last_mut() {
            Some(last) if !starts_new => {
                last.push(',');
                last.push_str(part);
            }
            _ => out.push(part.to_string()),
        }
    }
    out
}

/// Parses a multivariate spec for `m` objectives. `pfstat` asks `context`
/// for the reference and grid of the surrounding command.
pub fn multi(
    s: &str,
    m: usize,
    context: impl FnOnce() -> ParseResult<(Vec<f64>, DirectionGrid)>,
) -> ParseResult<MultiRisk> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    match (head, rest) {
        ("id", "") => Ok(MultiRisk::Identity),
        ("mvexp", "") => Ok(MultiRisk::MvExpectation),
        ("mvworst", "") => Ok(MultiRisk::MvWorstCase { subset: None }),
        ("mvbest", "") => Ok(MultiRisk::MvBestCase { subset: None }),
        ("mvar", a) => Ok(MultiRisk::MvaR { alpha: alpha(a)? }),
        ("mvdr", "") => Ok(MultiRisk::MvdrFull),
        ("cw", list) if !list.is_empty() => {
            let risks = split_components(list).iter().map(|r| uni(r)).collect::<ParseResult<_>>()?;
            Ok(MultiRisk::ComponentWise { risks })
        }
        ("pfstat", r) => {
            let rho = uni(r)?;
            let (eta, grid) = context()?;
            Ok(MultiRisk::ParetoStatistic { rho, eta, grid })
        }
        _ => lift(uni(s)?, m),
    }
}

fn lift(rho: UniRisk, m: usize) -> ParseResult<MultiRisk> {
    Ok(match rho {
        UniRisk::WorstCase { subset } => MultiRisk::MvWorstCase { subset },
        UniRisk::BestCase { subset } => MultiRisk::MvBestCase { subset },
        UniRisk::Expectation => MultiRisk::MvExpectation,
        UniRisk::VaR { alpha } => MultiRisk::MvaR { alpha },
        other => MultiRisk::ComponentWise { risks: vec![other; m] },
    })
}

/// `len:ETA:LAMBDA`, `linear:W`, `lp:TARGET:W:P`, `igd:TARGET:P:Q`,
/// `igdplus:TARGET:P:Q`, `wigd:TARGET:W`; vectors are comma separated.
pub fn scalariser(s: &str) -> ParseResult<Scalariser> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number {v:?} in {s:?}"));
    let out = match parts.as_slice() {
        ["len", eta, lambda] => Scalariser::length(
            vector(eta)?,
            Direction::normalised(vector(lambda)?).map_err(|e| e.to_string())?,
        ),
        ["linear", w] => Scalariser::Linear { w: vector(w)? },
        ["lp", t, w, p] => Scalariser::Lp { target: vector(t)?, w: vector(w)?, p: num(p)? },
        ["igd", t, p, q] => Scalariser::Igd { target: vector(t)?, p: num(p)?, q: num(q)? },
        ["igdplus", t, p, q] => Scalariser::IgdPlus { target: vector(t)?, p: num(p)?, q: num(q)? },
        ["wigd", t, w] => Scalariser::WeightedIgd { target: vector(t)?, w: vector(w)? },
        _ => return Err(format!("unknown scalariser {s:?}")),
    };
    out.validate().map_err(|e| e.to_string())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use robustify::{direction_grid, GridMode};

    fn ctx() -> ParseResult<(Vec<f64>, DirectionGrid)> {
        Ok((vec![0.0; 2], direction_grid(2, 4, GridMode::Deterministic).unwrap()))
    }

    #[test]
    fn univariate_forms() {
        assert_eq!(uni("worst").unwrap(), UniRisk::worst());
        assert_eq!(uni("exp").unwrap(), UniRisk::Expectation);
        assert_eq!(uni("cvar:0.9").unwrap(), UniRisk::CVaR { alpha: 0.9 });
        assert!(uni("var:1.5").unwrap_err().contains("alpha outside (0,1)"));
        assert!(uni("var:").is_err());
        assert!(uni("nope").is_err());
    }

    #[test]
    fn component_lists() {
        let r = multi("cw:exp,exp,var:0.9", 3, ctx).unwrap();
        assert_eq!(
            r,
            MultiRisk::ComponentWise { risks: vec![UniRisk::Expectation, UniRisk::Expectation, UniRisk::VaR { alpha: 0.9 }] }
        );
    }

    #[test]
    fn lifting() {
        assert_eq!(multi("exp", 2, ctx).unwrap(), MultiRisk::MvExpectation);
        assert_eq!(multi("var:0.5", 2, ctx).unwrap(), MultiRisk::MvaR { alpha: 0.5 });
        assert_eq!(
            multi("cvar:0.5", 2, ctx).unwrap(),
            MultiRisk::ComponentWise { risks: vec![UniRisk::CVaR { alpha: 0.5 }; 2] }
        );
        assert!(matches!(multi("pfstat:cvar:0.9", 2, ctx).unwrap(), MultiRisk::ParetoStatistic { .. }));
        assert_eq!(multi("mvdr", 2, ctx).unwrap(), MultiRisk::MvdrFull);
    }

    #[test]
    fn scalariser_forms() {
        assert!(matches!(scalariser("len:0,0:1,1").unwrap(), Scalariser::Length { .. }));
        assert!(matches!(scalariser("lp:-360,4,1:0.004,0.155,0.841:2").unwrap(), Scalariser::Lp { .. }));
        assert!(scalariser("linear:0.5,0.4").unwrap_err().contains("weights sum"));
        assert!(scalariser("lp:0,0:0.5,0.5").is_err());
    }
}
