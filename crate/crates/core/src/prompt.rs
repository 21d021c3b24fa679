//! Question/answer text for multimodal planners and the inverse parser.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curation::{EpisodeRecord, Provenance};
use crate::geometry::CameraView;
use crate::planners::{Trajectory, WAYPOINTS};

/// Bumped whenever the answer grammar changes.
pub const ANSWER_FORMAT_VERSION: u32 = 1;

const ANSWER_PREFIX: &str = "Here is the planning trajectory ";
const SPEEDS_PREFIX: &str = "Speeds: ";
const REQUEST: &str = "please provide the planning trajectory for the ego car.";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PromptError {
    #[error("record {0:?} has an empty city")]
    EmptyCity(String),
    #[error("expected {WAYPOINTS} values, got {0}")]
    WrongCount(usize),
    #[error("found {0} coordinate pairs, need {WAYPOINTS}")]
    TooFewPairs(usize),
    #[error("malformed {what} at byte {offset}")]
    Malformed { what: &'static str, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub question: String,
    pub spe_descriptor: String,
    pub expected_answer: String,
}

/// One training pair as exported to JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub id: String,
    pub question: String,
    pub answer: String,
}

pub fn spe_descriptor(city: &str, provenance: Provenance) -> String {
    let source = match provenance {
        Provenance::Sim => "Simulation",
        Provenance::Real => "Real-World",
    };
    format!("You are driving in {city} under {source} scenario.")
}

pub fn render_prompt(r: &EpisodeRecord) -> Result<PromptText, PromptError> {
    if r.city.trim().is_empty() {
        return Err(PromptError::EmptyCity(r.id.clone()));
    }
    let slots: Vec<String> = (1..=CameraView::ALL.len()).map(|i| format!("{i}: <video>")).collect();
    let views: Vec<&str> = CameraView::ALL.iter().map(|v| v.view_name()).collect();
    let spe = spe_descriptor(&r.city, r.provenance);
    let question = format!(
        "{}. These 6 videos are the {} of the ego vehicle. {} You need to {}, {}",
        slots.join(" "),
        views.join(", "),
        spe,
        r.command.text(),
        REQUEST
    );
    let gt = Trajectory::ground_truth(r);
    Ok(PromptText {
        question,
        spe_descriptor: spe,
        expected_answer: render_answer(&gt.waypoints, Some(&gt.speeds))?,
    })
}

pub fn prompt_pair(r: &EpisodeRecord) -> Result<PromptPair, PromptError> {
    let p = render_prompt(r)?;
    Ok(PromptPair {
        id: r.id.clone(),
        question: p.question,
        answer: p.expected_answer,
    })
}

/// Rounds `x` to two decimals, half to even, working on its shortest
/// round-trip decimal form. Returns the magnitude digits and the sign.
fn round2(x: f64) -> (String, bool) {
    let s = format!("{}", x.abs());
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let mut digits: Vec<u8> = int.bytes().chain(frac.bytes().chain(std::iter::repeat(b'0')).take(2)).collect();
    let rest = frac.get(2..).unwrap_or("");
    let first = rest.bytes().next().unwrap_or(b'0');
    let tail_nonzero = rest.bytes().skip(1).any(|b| b != b'0');
    let last_odd = (digits[digits.len() - 1] - b'0') % 2 == 1;
    let up = first > b'5' || (first == b'5' && (tail_nonzero || last_odd));
    if up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let n = digits.len();
    let body = format!(
        "{}.{}",
        std::str::from_utf8(&digits[..n - 2]).unwrap(),
        std::str::from_utf8(&digits[n - 2..]).unwrap()
    );
    let zero = digits.iter().all(|&d| d == b'0');
    (body, x.is_sign_negative() && !zero)
}

fn signed(x: f64) -> String {
    let (body, neg) = round2(x);
    format!("{}{body}", if neg { '-' } else { '+' })
}

fn unsigned(x: f64) -> String {
    let (body, neg) = round2(x);
    format!("{}{body}", if neg { "-" } else { "" })
}

/// `Here is the planning trajectory (+x.xx, +y.yy), ... .` with an optional
/// `Speeds: a.aa, ... .` sentence.
pub fn render_answer(waypoints: &[[f64; 2]], speeds: Option<&[f64]>) -> Result<String, PromptError> {
    if waypoints.len() != WAYPOINTS {
        return Err(PromptError::WrongCount(waypoints.len()));
    }
    let pairs: Vec<String> = waypoints
        .iter()
        .map(|p| format!("({}, {})", signed(p[0]), signed(p[1])))
        .collect();
    let mut out = format!("{ANSWER_PREFIX}{}.", pairs.join(", "));
    if let Some(v) = speeds {
        if v.len() != WAYPOINTS {
            return Err(PromptError::WrongCount(v.len()));
        }
        let vs: Vec<String> = v.iter().map(|x| unsigned(*x)).collect();
        out.push_str(&format!(" {SPEEDS_PREFIX}{}.", vs.join(", ")));
    }
    Ok(out)
}

struct Scanner<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Scanner<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn starts_number(&self) -> bool {
        let mut p = self.pos;
        while p < self.s.len() && self.s[p].is_ascii_whitespace() {
            p += 1;
        }
        matches!(self.s.get(p), Some(b'+' | b'-' | b'0'..=b'9' | b'.'))
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.s.get(self.pos), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        let digit = |p: usize| self.s.get(p).is_some_and(u8::is_ascii_digit);
        while digit(self.pos) {
            self.pos += 1;
        }
        // A sentence-ending period is not a decimal point.
        if self.s.get(self.pos) == Some(&b'.') && digit(self.pos + 1) {
            self.pos += 1;
            while digit(self.pos) {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).ok()?;
        text.trim_start_matches('+').parse().ok()
    }
}

/// Parses the first six `(x, y)` pairs anywhere in `s`, and speeds if a
/// `Speeds:` sentence follows them.
pub fn parse_answer(s: &str) -> Result<(Vec<[f64; 2]>, Option<Vec<f64>>), PromptError> {
    let mut sc = Scanner { s: s.as_bytes(), pos: 0 };
    let mut pairs = Vec::new();
    while pairs.len() < WAYPOINTS {
        let Some(open) = s[sc.pos..].find('(') else { break };
        sc.pos += open + 1;
        if !sc.starts_number() {
            continue;
        }
        let offset = sc.pos - 1;
        let bad = PromptError::Malformed { what: "coordinate pair", offset };
        let x = sc.number().ok_or(bad.clone())?;
        if !sc.eat(b',') {
            return Err(bad);
        }
        let y = sc.number().ok_or(bad.clone())?;
        if !sc.eat(b')') {
            return Err(bad);
        }
        pairs.push([x, y]);
    }
    if pairs.len() < WAYPOINTS {
        return Err(PromptError::TooFewPairs(pairs.len()));
    }
    let speeds = match s[sc.pos..].find(SPEEDS_PREFIX.trim_end()) {
        None => None,
        Some(i) => {
            sc.pos += i + SPEEDS_PREFIX.trim_end().len();
            let offset = sc.pos;
            let mut v = Vec::with_capacity(WAYPOINTS);
            for k in 0..WAYPOINTS {
                if k > 0 && !sc.eat(b',') {
                    return Err(PromptError::Malformed { what: "speed list", offset });
                }
                v.push(sc.number().ok_or(PromptError::Malformed { what: "speed list", offset })?);
            }
            Some(v)
        }
    };
    Ok((pairs, speeds))
}
