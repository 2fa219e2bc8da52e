//! Plain-text feature files.
//!
//! Each record is a block of `key = value` header lines, a blank line, the
//! program source, and a closing `===` line:
//!
//! ```text
//! name = target_mean_7
//! score = 0.41
//! score.granger = 0.52
//! score.mutual_info = 0.30
//!
//! feature "target_mean_7": rolling_mean(Target_Tminus1, 7)
//! ===
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dsl::DslProgram;
use crate::evaluators::EvalScore;
use crate::featuredb::FeatureSpec;

use super::EngineError;

pub const RECORD_SEPARATOR: &str = "===";

pub fn write_features(features: &[FeatureSpec]) -> String {
    let mut out = String::new();
    for f in features {
        writeln!(out, "name = {}", f.name()).unwrap();
        if let Some(s) = &f.scores {
            writeln!(out, "score = {}", s.mean).unwrap();
            for (k, v) in &s.per_evaluator {
                writeln!(out, "score.{k} = {v}").unwrap();
            }
        }
        if let Some(p) = f.pvalue {
            writeln!(out, "pvalue = {p}").unwrap();
        }
        writeln!(out, "created = {}", f.created_seq).unwrap();
        out.push('\n');
        out.push_str(f.source().trim_end());
        out.push('\n');
        out.push_str(RECORD_SEPARATOR);
        out.push('\n');
    }
    out
}

pub fn read_features(text: &str) -> Result<Vec<FeatureSpec>, EngineError> {
    let bad = |m: String| EngineError::Persist(m);
    let mut out = Vec::new();
    let mut lines = text.lines().peekable();
    loop {
        while lines.peek().is_some_and(|l| l.trim().is_empty()) {
            lines.next();
        }
        if lines.peek().is_none() {
            return Ok(out);
        }
        let mut name = None;
        let mut per = BTreeMap::new();
        let mut has_score = false;
        let mut pvalue = None;
        let mut created = out.len() as u64;
        for line in lines.by_ref() {
            if line.trim().is_empty() {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(format!("bad header line `{line}`")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("bad number `{v}`")))
            };
            match k {
                "name" => name = Some(v.to_string()),
                "score" => has_score = true,
                "pvalue" => pvalue = Some(num(v)?),
                "created" => created = v.parse().map_err(|_| bad(format!("bad number `{v}`")))?,
                _ => match k.strip_prefix("score.") {
                    Some(ev) => {
                        per.insert(ev.to_string(), num(v)?);
                    }
                    None => return Err(bad(format!("unknown header `{k}`"))),
                },
            }
        }
        let mut source = Vec::new();
        let mut closed = false;
        for line in lines.by_ref() {
            if line.trim_end() == RECORD_SEPARATOR {
                closed = true;
                break;
            }
            source.push(line);
        }
        if !closed {
            return Err(bad("record without closing `===`".into()));
        }
        let source = source.join("\n");
        let program = DslProgram::parse(&source)
            .map_err(|e| bad(format!("stored program does not parse: {e}")))?;
        if let Some(n) = &name {
            if n != program.name() {
                return Err(bad(format!(
                    "header name `{n}` differs from program name `{}`",
                    program.name()
                )));
            }
        }
        out.push(FeatureSpec {
            program,
            scores: (has_score || !per.is_empty()).then(|| EvalScore::new(per)),
            pvalue,
            created_seq: created,
        });
    }
}
