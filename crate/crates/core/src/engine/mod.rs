//! Question generation: turns decoded tuples into prompts, applies the
//! rejection rules, and grows the knowns store from the answers.
//!
//! All dialog goes through a [`Conversation`]. Two implementations exist: a
//! live one wrapping a blocking [`StudentIo`], and a replaying one that feeds
//! recorded answers back in and suspends when it runs out. The second is what
//! lets [`crate::session::Session`] pause between turns without threads.

mod prompt;
mod rules;

pub use prompt::{Answer, Expected, Prompt, PromptContext, PromptKind};
pub use rules::{
    detect_solvable, process_tuple, propagate_shared, render_caution, render_solve_advice,
    AskedMemo, RejectionRule, TupleOutcome,
};
pub(crate) use rules::{process_tuple_in, record_insertions};

use crate::error::{Error, Result};
use crate::events::EventRecord;

/// The blocking student-facing contract: show a prompt, then (for prompts
/// that expect one) receive the answer.
pub trait StudentIo {
    fn present(&mut self, prompt: &Prompt) -> Result<()>;
    fn receive(&mut self, prompt: &Prompt) -> Result<Answer>;
}

/// Why engine code stopped before finishing a unit of work.
#[derive(Debug)]
pub(crate) enum Halt {
    /// A replayed conversation ran out of recorded answers.
    Suspended,
    Failed(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Halt {
        Halt::Failed(e)
    }
}

pub(crate) trait Conversation {
    fn say(&mut self, prompt: &Prompt) -> Result<(), Halt>;
    fn ask(&mut self, prompt: &Prompt) -> Result<Answer, Halt>;
}

pub(crate) struct LiveConversation<'a> {
    io: &'a mut dyn StudentIo,
}

impl<'a> LiveConversation<'a> {
    pub(crate) fn new(io: &'a mut dyn StudentIo) -> Self {
        LiveConversation { io }
    }
}

impl Conversation for LiveConversation<'_> {
    fn say(&mut self, prompt: &Prompt) -> Result<(), Halt> {
        self.io.present(prompt)?;
        Ok(())
    }

    fn ask(&mut self, prompt: &Prompt) -> Result<Answer, Halt> {
        self.io.present(prompt)?;
        let answer = self.io.receive(prompt)?;
        prompt.check(&answer)?;
        Ok(answer)
    }
}

/// One item of outward dialog produced while replaying a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Outgoing {
    Say(Prompt),
    Ask(Prompt),
}

pub(crate) struct ReplayConversation<'a> {
    answers: &'a [Answer],
    used: usize,
    pub(crate) transcript: Vec<Outgoing>,
}

impl<'a> ReplayConversation<'a> {
    pub(crate) fn new(answers: &'a [Answer]) -> Self {
        ReplayConversation {
            answers,
            used: 0,
            transcript: Vec::new(),
        }
    }
}

impl Conversation for ReplayConversation<'_> {
    fn say(&mut self, prompt: &Prompt) -> Result<(), Halt> {
        self.transcript.push(Outgoing::Say(prompt.clone()));
        Ok(())
    }

    fn ask(&mut self, prompt: &Prompt) -> Result<Answer, Halt> {
        self.transcript.push(Outgoing::Ask(prompt.clone()));
        match self.answers.get(self.used) {
            Some(answer) => {
                self.used += 1;
                Ok(answer.clone())
            }
            None => Err(Halt::Suspended),
        }
    }
}

/// A conversation plus the event records produced alongside it.
pub(crate) struct Exchange<'c> {
    conv: &'c mut dyn Conversation,
    pub(crate) records: Vec<EventRecord>,
}

impl<'c> Exchange<'c> {
    pub(crate) fn new(conv: &'c mut dyn Conversation) -> Self {
        Exchange {
            conv,
            records: Vec::new(),
        }
    }

    pub(crate) fn say(&mut self, prompt: Prompt) -> Result<(), Halt> {
        self.conv.say(&prompt)?;
        self.records.push(EventRecord::Question {
            prompt: prompt.kind,
            text: prompt.text,
            answer: None,
        });
        Ok(())
    }

    pub(crate) fn ask(&mut self, prompt: Prompt) -> Result<Answer, Halt> {
        let answer = self.conv.ask(&prompt)?;
        let record = match (prompt.kind, prompt.context.variable, &prompt.context.past) {
            (PromptKind::CautionConfirm, Some(new), Some(past)) => EventRecord::Caution {
                new,
                past: past.symbol,
                text: prompt.text,
                answer: answer.clone(),
            },
            _ => EventRecord::Question {
                prompt: prompt.kind,
                text: prompt.text,
                answer: Some(answer.clone()),
            },
        };
        self.records.push(record);
        Ok(answer)
    }

    pub(crate) fn record(&mut self, record: EventRecord) {
        self.records.push(record);
    }
}
