//! Problem scripts and the deterministic scripted student that answers from
//! them. Used for reproducible experiments and tests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::VariableId;
use crate::engine::{Answer, Prompt, PromptKind, StudentIo};
use crate::error::{Error, Result};
use crate::stores::Provenance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptZone {
    pub description: String,
    #[serde(default)]
    pub facts: BTreeMap<VariableId, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptObject {
    pub description: String,
    /// Zones in the order they happen.
    pub zones: Vec<ScriptZone>,
    /// Whether the student agrees to carry quantities from zone `i` into
    /// zone `i + 1`. Missing means agree to all.
    #[serde(default)]
    pub link_consents: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptTarget {
    pub object: usize,
    pub variable: VariableId,
    pub zone: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemScript {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub statement: String,
    pub objects: Vec<ScriptObject>,
    pub target: ScriptTarget,
}

impl ProblemScript {
    /// The car problem bundled with the crate.
    pub fn car() -> ProblemScript {
        load_script(include_str!("../problems/car.json")).expect("bundled car script is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ProblemScript> {
        load_script(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SchemaViolation(m));
        if self.objects.is_empty() {
            return bad("a script needs at least one object".into());
        }
        if self.objects.len() > 8 {
            return bad("at most 8 objects fit the object field".into());
        }
        for (i, object) in self.objects.iter().enumerate() {
            if object.description.trim().is_empty() {
                return bad(format!("object {i} has an empty description"));
            }
            if object.zones.is_empty() {
                return bad(format!("object {i} has no zones"));
            }
            if object.zones.len() > 8 {
                return bad(format!("object {i} has more than 8 zones"));
            }
            if let Some(z) = object
                .zones
                .iter()
                .position(|z| z.description.trim().is_empty())
            {
                return bad(format!("object {i} zone {z} has an empty description"));
            }
            if !object.link_consents.is_empty()
                && object.link_consents.len() != object.zones.len() - 1
            {
                return bad(format!(
                    "object {i} has {} zones but {} link consents",
                    object.zones.len(),
                    object.link_consents.len()
                ));
            }
        }
        let t = self.target;
        match self.objects.get(t.object) {
            None => bad(format!("target object {} does not exist", t.object)),
            Some(o) if t.zone >= o.zones.len() => {
                bad(format!("target zone {} does not exist", t.zone))
            }
            Some(_) => Ok(()),
        }
    }
}

/// Parses and validates a JSON problem script.
pub fn load_script(source: &str) -> Result<ProblemScript> {
    let script: ProblemScript = serde_json::from_str(source).map_err(|e| {
        if e.is_data() {
            Error::SchemaViolation(e.to_string())
        } else {
            Error::ScriptParse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        }
    })?;
    script.validate()?;
    Ok(script)
}

/// Answers every prompt from a [`ProblemScript`], binding engine object and
/// zone numbers to script entries as they get described.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedStudent {
    script: ProblemScript,
    objects: BTreeMap<u8, usize>,
    zones: BTreeMap<(u8, u8), usize>,
    /// A zone whose value was just given but whose description is still to
    /// be asked: (object, engine zone, script zone).
    pending_zone: Option<(u8, u8, usize)>,
}

impl ScriptedStudent {
    pub fn new(script: ProblemScript) -> ScriptedStudent {
        ScriptedStudent {
            script,
            objects: BTreeMap::new(),
            zones: BTreeMap::new(),
            pending_zone: None,
        }
    }

    pub fn script(&self) -> &ProblemScript {
        &self.script
    }

    /// The script zone bound to an engine zone, if any.
    pub fn zone_binding(&self, object: u8, zone: u8) -> Option<usize> {
        self.zones.get(&(object, zone)).copied()
    }

    fn script_object(&self, object: Option<u8>) -> Option<(usize, &ScriptObject)> {
        let idx = *self.objects.get(&object?)?;
        Some((idx, &self.script.objects[idx]))
    }

    fn fact(&self, object: u8, zone: u8, var: VariableId) -> Option<&str> {
        let (oi, _) = self.script_object(Some(object))?;
        let zi = self.zone_binding(object, zone)?;
        self.script.objects[oi].zones[zi]
            .facts
            .get(&var)
            .map(String::as_str)
    }

    /// The scripted reply to `prompt`.
    pub fn answer(&mut self, prompt: &Prompt) -> Result<Answer> {
        let ctx = &prompt.context;
        let unanswerable =
            || Error::UnanswerablePrompt(format!("{:?}: {}", prompt.kind, prompt.text));
        match prompt.kind {
            PromptKind::Target => Ok(Answer::text(self.script.target.variable.symbol())),
            PromptKind::NewObject => {
                let next = self.objects.len();
                match (ctx.object, self.script.objects.get(next)) {
                    (Some(n), Some(obj)) => {
                        self.objects.insert(n, next);
                        Ok(Answer::text(obj.description.clone()))
                    }
                    _ => Ok(Answer::no()),
                }
            }
            PromptKind::MoreObjects => Ok(if self.objects.len() < self.script.objects.len() {
                Answer::yes()
            } else {
                Answer::no()
            }),
            PromptKind::KnowVariable => {
                let (Some(object), Some(zone), Some(var)) = (ctx.object, ctx.zone, ctx.variable)
                else {
                    return Err(unanswerable());
                };
                let Some((_, obj)) = self.script_object(Some(object)) else {
                    return Ok(Answer::no());
                };
                if ctx.zone_described {
                    return Ok(match self.fact(object, zone, var) {
                        Some(v) => Answer::text(v),
                        None => Answer::no(),
                    });
                }
                // An undescribed zone: offer the first unbound script zone
                // that has this value.
                let bound: Vec<usize> = self
                    .zones
                    .iter()
                    .filter(|((o, _), _)| *o == object)
                    .map(|(_, s)| *s)
                    .collect();
                let candidate = obj
                    .zones
                    .iter()
                    .enumerate()
                    .find(|(i, z)| !bound.contains(i) && z.facts.contains_key(&var));
                match candidate {
                    Some((zi, z)) => {
                        let value = z.facts[&var].clone();
                        self.pending_zone = Some((object, zone, zi));
                        Ok(Answer::text(value))
                    }
                    None => Ok(Answer::no()),
                }
            }
            PromptKind::ZoneDescription => {
                let (Some(object), Some(zone)) = (ctx.object, ctx.zone) else {
                    return Err(unanswerable());
                };
                match self.pending_zone.take() {
                    Some((o, z, zi)) if o == object && z == zone => {
                        self.zones.insert((object, zone), zi);
                        let oi = self.objects[&object];
                        Ok(Answer::text(
                            self.script.objects[oi].zones[zi].description.clone(),
                        ))
                    }
                    _ => Err(unanswerable()),
                }
            }
            PromptKind::CautionConfirm => {
                let (Some(object), Some(zone), Some(var)) = (ctx.object, ctx.zone, ctx.variable)
                else {
                    return Err(unanswerable());
                };
                let value_ok = match (&ctx.response, self.fact(object, zone, var)) {
                    (Some(given), Some(fact)) => given == fact,
                    (None, Some(_)) => true,
                    _ => false,
                };
                let past_ok = match &ctx.past {
                    Some(past) if past.provenance == Provenance::Student => {
                        self.fact(past.object, past.zone, past.symbol)
                            == Some(past.response.as_str())
                    }
                    _ => true,
                };
                Ok(if value_ok && past_ok {
                    Answer::yes()
                } else {
                    Answer::no()
                })
            }
            PromptKind::TargetConfirm => {
                let t = self.script.target;
                let hit = ctx.object.and_then(|o| self.objects.get(&o)) == Some(&t.object)
                    && ctx
                        .object
                        .zip(ctx.zone)
                        .and_then(|(o, z)| self.zone_binding(o, z))
                        == Some(t.zone)
                    && ctx.variable == Some(t.variable);
                Ok(if hit { Answer::yes() } else { Answer::no() })
            }
            PromptKind::ZoneOrder => {
                let object = ctx.object.ok_or_else(unanswerable)?;
                let mut zones = ctx.zones.clone();
                zones.sort_by_key(|z| (self.zone_binding(object, *z).unwrap_or(usize::MAX), *z));
                let listed: Vec<String> = zones.iter().map(u8::to_string).collect();
                Ok(Answer::text(listed.join(", ")))
            }
            PromptKind::ZoneLink => {
                let link = ctx.link.ok_or_else(unanswerable)?;
                let Some((_, obj)) = self.script_object(Some(link.object)) else {
                    return Ok(Answer::no());
                };
                let from = self.zone_binding(link.object, link.from_zone);
                let to = self.zone_binding(link.object, link.to_zone);
                let consent = match (from, to) {
                    (Some(a), Some(b)) if b == a + 1 => {
                        obj.link_consents.get(a).copied().unwrap_or(true)
                    }
                    _ => false,
                };
                Ok(if consent { Answer::yes() } else { Answer::no() })
            }
            PromptKind::SolveAdvice | PromptKind::Info => Err(unanswerable()),
        }
    }
}

impl StudentIo for ScriptedStudent {
    fn present(&mut self, _prompt: &Prompt) -> Result<()> {
        Ok(())
    }

    fn receive(&mut self, prompt: &Prompt) -> Result<Answer> {
        self.answer(prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn car_script_loads() {
        let s = ProblemScript::car();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.objects[0].zones.len(), 2);
        assert_eq!(s.target.variable, VariableId::X);
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        match load_script("{\n  \"objects\": [,\n") {
            Err(Error::ScriptParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_script(""), Err(Error::ScriptParse { .. })));
    }

    #[test]
    fn schema_errors() {
        let no_target = r#"{"objects":[{"description":"a car","zones":[{"description":"d"}]}]}"#;
        assert!(matches!(
            load_script(no_target),
            Err(Error::SchemaViolation(_))
        ));
        let bad_zone = r#"{"objects":[{"description":"a car","zones":[{"description":"d"}]}],
            "target":{"object":0,"variable":"x","zone":3}}"#;
        assert!(matches!(
            load_script(bad_zone),
            Err(Error::SchemaViolation(_))
        ));
    }
}
