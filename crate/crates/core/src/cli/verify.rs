//! Identity suite behind `toridimer verify`.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::height::{check_prop21, height_sum};
use crate::kasteleyn::{char_poly, check_orientation, default_orientation, partition_function};
use crate::laplacian::kernel::{verify_green, EdgeKernel};
use crate::laplacian::{
    verify_block_identity, verify_block_identity_wired, verify_forman, verify_prop31, wired_laplacian, BlockReport,
    Connection,
};
use crate::lattice::{PeriodicGraph, TorusInstance, WiredInstance};
use crate::numeric::{format_rational, rat, rel_err, Cplx, Rat};
use crate::phase::{fundamental_poly, root_order_at_11};
use crate::sampler::TorusEnsemble;
use crate::temperley::{
    dimer_partition_sum, dimer_to_forest, dual_tree_of, enumerate_dimers, enumerate_ocrsf_pairs, enumerate_wired_trees,
    forest_to_dimer, OcrsfPair, DEFAULT_CAP,
};

pub const TORUS_SIZES: [usize; 2] = [1, 2];
pub const WIRED_SIZES: [usize; 2] = [3, 4];

/// Every identity the suite must exercise, with a one-line statement.
pub const MANIFEST: &[(&str, &str)] = &[
    ("kasteleyn-orientation", "every face of the double graph is clockwise odd"),
    ("partition-function", "signed combination of the four twisted determinants equals the enumerated Z"),
    ("planar-bijection", "wired spanning trees with their dual trees are the dimers of the punctured double graph"),
    ("toroidal-bijection", "OCRSF pairs and torus dimers are in weight-preserving bijection"),
    ("height-characteristic", "height-change generating function equals P(z,w)"),
    ("height-homology", "h_x = -n(k-k1-k2), h_y = m(k-k1-k2) on every matching"),
    ("laplacian-factorization", "connection Laplacian equals d* d"),
    ("forman", "det of the connection Laplacian equals the OCRSF cycle-weighted sum"),
    ("characteristic-laplacian", "P(z,w) equals det of the connection Laplacian up to a monomial"),
    ("block-form", "K M is block upper triangular with the two Laplacians on the diagonal"),
    ("finite-inverse", "(K^-1)^V times the reduced Laplacian equals the reduced incidence"),
    ("directed-edge-kernel", "directed edge probabilities of the wired tree are determinantal"),
    ("undirected-edge-kernel", "undirected edge probabilities of the wired tree are determinantal"),
    ("green-matrix", "B = (K^-1)^V D and B matches expected visit differences"),
    ("separation", "vertices joined by a segment crossing no dual cycle are disconnected only if a primal cycle separates them"),
    ("zero-field-root", "P(1,1) = 0 with root order 1 or 2"),
];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub identity: &'static str,
    pub instance: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Coverage {
    pub required: usize,
    pub exercised: usize,
    pub missing: Vec<&'static str>,
    pub unknown: Vec<&'static str>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub graph: String,
    pub exact: bool,
    pub checks: Vec<CheckResult>,
    pub coverage: Coverage,
    pub passed: bool,
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn push(&mut self, identity: &'static str, instance: &str, passed: bool, detail: Value) {
        self.checks.push(CheckResult { identity, instance: instance.to_string(), passed, detail });
    }

    /// Records a failed check instead of aborting the suite.
    fn run(&mut self, identity: &'static str, instance: &str, f: impl FnOnce() -> Result<(bool, Value)>) {
        match f() {
            Ok((ok, d)) => self.push(identity, instance, ok, d),
            Err(e) => self.push(identity, instance, false, json!({ "error": e.to_string() })),
        }
    }
}

pub fn coverage(checks: &[CheckResult]) -> Coverage {
    let seen: BTreeSet<&str> = checks.iter().map(|c| c.identity).collect();
    let known: BTreeSet<&str> = MANIFEST.iter().map(|(k, _)| *k).collect();
    Coverage {
        required: known.len(),
        exercised: seen.intersection(&known).count(),
        missing: known.difference(&seen).copied().collect(),
        unknown: seen.difference(&known).copied().collect(),
    }
}

fn rat_json(r: &Rat) -> Value {
    Value::String(format_rational(r))
}

fn block_checks(s: &mut Suite, inst: &str, exact: bool, r: Result<BlockReport>) {
    let r = match r {
        Ok(r) => r,
        Err(e) => {
            for id in ["laplacian-factorization", "block-form", "finite-inverse"] {
                s.push(id, inst, false, json!({ "error": e.to_string() }));
            }
            return;
        }
    };
    let tol = if exact { 0.0 } else { 1e-8 };
    let scale_ok = |x: f64| x <= tol;
    s.push("laplacian-factorization", inst, scale_ok(r.eq37_residual), json!({ "residual": r.eq37_residual }));
    let block_ok = scale_ok(r.stacked_residual)
        && scale_ok(r.primal_block_residual)
        && scale_ok(r.dual_block_residual)
        && scale_ok(r.zero_block_max);
    s.push(
        "block-form",
        inst,
        block_ok,
        json!({
            "stacked_residual": r.stacked_residual,
            "primal_block_residual": r.primal_block_residual,
            "dual_block_residual": r.dual_block_residual,
            "zero_block_max": r.zero_block_max,
        }),
    );
    s.push(
        "finite-inverse",
        inst,
        r.passed,
        json!({ "inverse_residual": r.inverse_residual, "singular": r.singular, "singular_expected": r.singular_expected }),
    );
}

fn unit_points(k: usize) -> Vec<(Cplx, Cplx)> {
    (0..k)
        .map(|i| {
            let a = 0.37 + 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            (Cplx::from_polar(1.0, a), Cplx::from_polar(1.0, 2.3 * a + 0.4))
        })
        .collect()
}

fn torus_checks(s: &mut Suite, g: &PeriodicGraph, n: usize, exact: bool) -> Result<()> {
    let t = TorusInstance::new(g, n)?;
    let inst = format!("torus n={n}");
    let inst = inst.as_str();

    s.run("kasteleyn-orientation", inst, || {
        let o = default_orientation(&t.double, t.primal())?;
        check_orientation(&t.double, &o.sign)?;
        Ok((true, json!({ "double_edges": t.double.edge_count() })))
    });

    s.run("partition-function", inst, || {
        let pf = partition_function(&t, DEFAULT_CAP)?;
        let z = dimer_partition_sum(&t.double, DEFAULT_CAP)?;
        Ok((
            pf.value == z,
            json!({
                "Z": rat_json(&z),
                "pattern": pf.pattern,
                "dets": pf.dets.iter().map(rat_json).collect::<Vec<_>>(),
                "matching_patterns": pf.matching_patterns,
            }),
        ))
    });

    s.run("toroidal-bijection", inst, || {
        let dimers = enumerate_dimers(&t.double, DEFAULT_CAP)?;
        let pairs = enumerate_ocrsf_pairs(&t, DEFAULT_CAP)?;
        let mut bad = 0usize;
        for m in &dimers {
            let pair = dimer_to_forest(&t.double, m)?;
            let back = forest_to_dimer(&t.double, &pair)?;
            if back != *m || pair.weight(t.primal()) != m.weight(&t.double) {
                bad += 1;
            }
        }
        let from_dimers: BTreeSet<OcrsfPair> =
            dimers.iter().map(|m| dimer_to_forest(&t.double, m)).collect::<Result<_>>()?;
        let enumerated: BTreeSet<OcrsfPair> = pairs.iter().cloned().collect();
        let same = from_dimers == enumerated && pairs.len() == dimers.len();
        Ok((bad == 0 && same, json!({ "dimers": dimers.len(), "pairs": pairs.len(), "round_trip_failures": bad })))
    });

    s.run("height-characteristic", inst, || {
        let cp = char_poly(&t)?;
        let hs = height_sum(&t, DEFAULT_CAP)?;
        let exact_eq = hs == cp.poly;
        let hf = hs.to_f64();
        let pf = cp.poly.to_f64();
        let max_err = unit_points(16).into_iter().map(|(z, w)| rel_err(hf.eval(z, w), pf.eval(z, w))).fold(0.0, f64::max);
        let q = [(rat(3, 7), rat(-5, 2)), (rat(2, 1), rat(1, 3))];
        let rational_eq = q.iter().all(|(z, w)| hs.eval_exact(z, w) == cp.poly.eval_exact(z, w));
        Ok((
            exact_eq && rational_eq && max_err <= 1e-9,
            json!({ "P": cp.poly.to_string(), "coefficientwise": exact_eq, "points": 16, "max_rel_err": max_err }),
        ))
    });

    s.run("height-homology", inst, || {
        let r = check_prop21(&t, DEFAULT_CAP)?;
        Ok((r.failures.is_empty() && r.sign_failures.is_empty() && r.passed == r.total, r.to_json()))
    });

    if exact {
        block_checks(s, inst, exact, verify_block_identity(&t, &rat(3, 7), &rat(-5, 2)));
        s.run("forman", inst, || {
            let c = Connection::from_paths(&t, &rat(3, 7), &rat(-5, 2))?;
            let r = verify_forman(t.primal(), &c, DEFAULT_CAP)?;
            Ok((r.equal, serde_json::to_value(&r)?))
        });
    } else {
        let (z, w) = (Cplx::from_polar(1.0, 0.7), Cplx::from_polar(1.0, 1.9));
        block_checks(s, inst, exact, verify_block_identity(&t, &z, &w));
        s.run("forman", inst, || {
            let c = Connection::from_paths(&t, &z, &w)?;
            let r = verify_forman(t.primal(), &c, DEFAULT_CAP)?;
            Ok((r.equal, serde_json::to_value(&r)?))
        });
    }

    s.run("characteristic-laplacian", inst, || {
        let r = verify_prop31(&t, &unit_points(16), DEFAULT_CAP)?;
        Ok((r.passed, serde_json::to_value(&r)?))
    });

    if n >= 2 {
        s.run("separation", inst, || {
            let e = TorusEnsemble::new(&t, DEFAULT_CAP)?;
            let v = e.separation_violations()?;
            Ok((v.is_empty(), json!({ "separated": e.separated_count(), "violations": v.len(), "pairs": e.records.len() })))
        });
    }
    Ok(())
}

fn wired_checks(s: &mut Suite, g: &PeriodicGraph, n: usize, exact: bool) -> Result<()> {
    let w = WiredInstance::new(g, n)?;
    let inst = format!("wired n={n}");
    let inst = inst.as_str();
    let p = w.primal();

    s.run("kasteleyn-orientation", inst, || {
        let o = default_orientation(&w.double, p)?;
        check_orientation(&w.double, &o.sign)?;
        Ok((true, json!({ "double_edges": w.double.edge_count() })))
    });

    let trees = enumerate_wired_trees(&w, DEFAULT_CAP)?;
    let weight = |t: &Vec<Option<usize>>| -> Rat { t.iter().flatten().map(|&h| p.half_weight(h).clone()).product() };
    let total: Rat = trees.iter().map(weight).sum();

    s.run("planar-bijection", inst, || {
        let z = dimer_partition_sum(&w.double, DEFAULT_CAP)?;
        let det = wired_laplacian::<Rat>(&w).matrix.det()?;
        let mut bad = 0usize;
        for t in &trees {
            let pair = OcrsfPair { primal: t.clone(), dual: dual_tree_of(&w, t)? };
            let m = forest_to_dimer(&w.double, &pair)?;
            if dimer_to_forest(&w.double, &m)? != pair || m.weight(&w.double) != weight(t) {
                bad += 1;
            }
        }
        let dimers = enumerate_dimers(&w.double, DEFAULT_CAP)?.len();
        Ok((
            bad == 0 && z == total && det == total && dimers == trees.len(),
            json!({ "trees": trees.len(), "dimers": dimers, "Z": rat_json(&z), "det_laplacian": rat_json(&det), "round_trip_failures": bad }),
        ))
    });

    if exact {
        block_checks(s, inst, exact, verify_block_identity_wired::<Rat>(&w));
    } else {
        block_checks(s, inst, exact, verify_block_identity_wired::<Cplx>(&w));
    }

    let freq = |halves: &[usize]| -> Rat {
        let hit: Rat = trees.iter().filter(|t| halves.iter().all(|h| t.contains(&Some(*h)))).map(weight).sum();
        hit / total.clone()
    };
    let nh = 2 * p.edge_count();
    let ne = p.edge_count();

    s.run("directed-edge-kernel", inst, || {
        let k = EdgeKernel::<Rat>::wired(&w)?;
        let (mut checked, mut bad, mut out_of_range) = (0usize, 0usize, 0usize);
        for a in 0..nh {
            for b in a..nh {
                let hs: Vec<usize> = if a == b { vec![a] } else { vec![a, b] };
                let pr = k.directed_probability(&w.double, &hs)?;
                checked += 1;
                if pr != freq(&hs) {
                    bad += 1;
                }
                if pr < rat(0, 1) || pr > rat(1, 1) {
                    out_of_range += 1;
                }
            }
        }
        Ok((bad == 0 && out_of_range == 0, json!({ "checked": checked, "mismatches": bad, "out_of_range": out_of_range })))
    });

    s.run("undirected-edge-kernel", inst, || {
        let k = EdgeKernel::<Rat>::wired(&w)?;
        let (mut checked, mut bad, mut out_of_range) = (0usize, 0usize, 0usize);
        for e in 0..ne {
            for f in e..ne {
                let es: Vec<usize> = if e == f { vec![e] } else { vec![e, f] };
                let pr = k.undirected_probability(&w.double, &es)?;
                let mut want = rat(0, 1);
                if e == f {
                    want = freq(&[2 * e]) + freq(&[2 * e + 1]);
                } else {
                    for a in [2 * e, 2 * e + 1] {
                        for b in [2 * f, 2 * f + 1] {
                            want += freq(&[a, b]);
                        }
                    }
                }
                checked += 1;
                if pr != want {
                    bad += 1;
                }
                if pr < rat(0, 1) || pr > rat(1, 1) {
                    out_of_range += 1;
                }
            }
        }
        Ok((bad == 0 && out_of_range == 0, json!({ "checked": checked, "mismatches": bad, "out_of_range": out_of_range })))
    });

    s.run("green-matrix", inst, || {
        let r = if exact { verify_green::<Rat>(&w)? } else { verify_green::<Cplx>(&w)? };
        Ok((r.passed, serde_json::to_value(&r)?))
    });
    Ok(())
}

fn root_check(s: &mut Suite, g: &PeriodicGraph) {
    s.run("zero-field-root", "fundamental domain", || {
        let p = fundamental_poly(g)?;
        let value = p.eval_exact(&rat(1, 1), &rat(1, 1));
        let order = root_order_at_11(&p)?;
        let (gz, gw) = p.gradient_at_one();
        Ok((
            value == rat(0, 1) && (order == 1 || order == 2),
            json!({ "P": p.to_string(), "P(1,1)": rat_json(&value), "order": order, "gradient": [rat_json(&gz), rat_json(&gw)] }),
        ))
    });
}

/// Runs every check on tori `n = 1, 2` and wired boxes `n = 3, 4`.
pub fn run_suite(g: &PeriodicGraph, exact: bool) -> VerifyReport {
    let mut s = Suite { checks: Vec::new() };
    for n in TORUS_SIZES {
        if let Err(e) = torus_checks(&mut s, g, n, exact) {
            s.push("kasteleyn-orientation", &format!("torus n={n}"), false, json!({ "error": e.to_string() }));
        }
    }
    for n in WIRED_SIZES {
        if let Err(e) = wired_checks(&mut s, g, n, exact) {
            s.push("kasteleyn-orientation", &format!("wired n={n}"), false, json!({ "error": e.to_string() }));
        }
    }
    root_check(&mut s, g);
    let coverage = coverage(&s.checks);
    let passed = s.checks.iter().all(|c| c.passed) && coverage.missing.is_empty() && coverage.unknown.is_empty();
    VerifyReport { graph: g.name.clone(), exact, checks: s.checks, coverage, passed }
}
