use serde::{Deserialize, Serialize};

use crate::domain::{QuadTuple, VariableId};
use crate::error::{Error, Result};
use crate::stores::{KnownEntry, LinkKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    /// Startup question naming the sought quantity.
    Target,
    NewObject,
    MoreObjects,
    KnowVariable,
    ZoneDescription,
    CautionConfirm,
    /// Asks whether a freshly known target-variable entry is the one sought.
    TargetConfirm,
    ZoneOrder,
    ZoneLink,
    SolveAdvice,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expected {
    FreeText,
    YesNo,
    Ordering,
    None,
}

/// The tuple and registry references a prompt was built from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptContext {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<QuadTuple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zone: Option<u8>,
    /// Whether `zone` already has a student description.
    #[serde(default)]
    pub zone_described: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<VariableId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equation: Option<u8>,
    /// The student's value for `variable`, when one was just given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Earlier known a caution is measured against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub past: Option<KnownEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zones: Vec<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub kind: PromptKind,
    pub text: String,
    pub expected: Expected,
    #[serde(default)]
    pub context: PromptContext,
}

impl Prompt {
    pub fn new(kind: PromptKind, expected: Expected, text: impl Into<String>) -> Prompt {
        Prompt {
            kind,
            text: text.into(),
            expected,
            context: PromptContext::default(),
        }
    }

    pub fn with_context(mut self, context: PromptContext) -> Prompt {
        self.context = context;
        self
    }

    pub fn needs_answer(&self) -> bool {
        self.expected != Expected::None
    }

    /// Checks that `answer` has the shape this prompt expects.
    pub fn check(&self, answer: &Answer) -> Result<()> {
        match self.expected {
            Expected::None => Err(Error::AnswerShape(format!(
                "{:?} prompts take no answer",
                self.kind
            ))),
            Expected::YesNo => match answer.affirmative {
                Some(_) => Ok(()),
                None => Err(Error::AnswerShape("a yes/no answer is required".into())),
            },
            Expected::FreeText => {
                if answer.is_negative() {
                    return Ok(());
                }
                if answer.text.trim().is_empty() {
                    return Err(Error::AnswerShape("answer text is empty".into()));
                }
                if self.kind == PromptKind::Target {
                    answer.text.parse::<VariableId>().map_err(|_| {
                        Error::AnswerShape(format!(
                            "{:?} is not one of x, x0, v0x, dt, a, vx, t, t0",
                            answer.text.trim()
                        ))
                    })?;
                }
                Ok(())
            }
            Expected::Ordering => self.parse_ordering(answer).map(|_| ()),
        }
    }

    /// Reads a zone ordering such as `"0, 7"` and checks it against the
    /// zones the prompt listed.
    pub fn parse_ordering(&self, answer: &Answer) -> Result<Vec<u8>> {
        let order = answer
            .text
            .split(|c: char| c == ',' || c.is_whitespace() || c == '>')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<u8>()
                    .map_err(|_| Error::AnswerShape(format!("{s:?} is not a zone number")))
            })
            .collect::<Result<Vec<u8>>>()?;
        let mut sorted = order.clone();
        sorted.sort_unstable();
        let mut listed = self.context.zones.clone();
        listed.sort_unstable();
        if sorted != listed {
            return Err(Error::AnswerShape(format!(
                "ordering must list each of the zones {:?} exactly once",
                self.context.zones
            )));
        }
        Ok(order)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affirmative: Option<bool>,
}

const NEGATIVE_WORDS: &[&str] = &[
    "no",
    "n",
    "nope",
    "don't know",
    "dont know",
    "unknown",
    "i don't know",
];
const POSITIVE_WORDS: &[&str] = &["yes", "y", "yeah", "yep", "sure"];

impl Answer {
    pub fn text(text: impl Into<String>) -> Answer {
        Answer {
            text: text.into(),
            affirmative: None,
        }
    }

    pub fn yes() -> Answer {
        Answer {
            text: "yes".into(),
            affirmative: Some(true),
        }
    }

    pub fn no() -> Answer {
        Answer {
            text: "no".into(),
            affirmative: Some(false),
        }
    }

    /// Interprets a typed line the way a terminal session does: yes/no words
    /// set `affirmative`, anything else is free text.
    pub fn from_line(line: &str) -> Answer {
        let text = line.trim();
        let lower = text.to_lowercase();
        let affirmative = if NEGATIVE_WORDS.contains(&lower.as_str()) {
            Some(false)
        } else if POSITIVE_WORDS.contains(&lower.as_str()) {
            Some(true)
        } else {
            None
        };
        Answer {
            text: text.to_string(),
            affirmative,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.affirmative == Some(false)
    }

    pub fn is_affirmative(&self) -> bool {
        self.affirmative == Some(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yes_no_requires_affirmative() {
        let p = Prompt::new(PromptKind::MoreObjects, Expected::YesNo, "More?");
        assert!(p.check(&Answer::text("maybe")).is_err());
        assert!(p.check(&Answer::yes()).is_ok());
    }

    #[test]
    fn free_text_accepts_values_or_a_decline() {
        let p = Prompt::new(PromptKind::KnowVariable, Expected::FreeText, "Know a?");
        assert!(p.check(&Answer::text("5 m/s^2")).is_ok());
        assert!(p.check(&Answer::no()).is_ok());
        assert!(p.check(&Answer::text("  ")).is_err());
    }

    #[test]
    fn target_answers_must_name_a_variable() {
        let p = Prompt::new(PromptKind::Target, Expected::FreeText, "Which?");
        assert!(p.check(&Answer::text("x")).is_ok());
        assert!(p.check(&Answer::text("distance")).is_err());
    }

    #[test]
    fn ordering_must_be_a_permutation() {
        let p = Prompt::new(PromptKind::ZoneOrder, Expected::Ordering, "Order").with_context(
            PromptContext {
                zones: vec![0, 7],
                ..PromptContext::default()
            },
        );
        assert_eq!(p.parse_ordering(&Answer::text("7, 0")).unwrap(), vec![7, 0]);
        assert!(p.check(&Answer::text("0")).is_err());
        assert!(p.check(&Answer::text("0 3")).is_err());
        assert!(p.check(&Answer::text("zero seven")).is_err());
    }

    #[test]
    fn typed_lines() {
        assert!(Answer::from_line(" No ").is_negative());
        assert!(Answer::from_line("y").is_affirmative());
        assert_eq!(Answer::from_line("a car").affirmative, None);
    }
}
