//! Line-delimited annotator protocol: one sentence per input line, one JSON
//! object `{tokens:[{surface,pos,number,gender}], relations:[[head,dep,label]]}`
//! per output line.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::text::{Gender, Number, PosTag, Token};

use super::{AnnotateError, AnnotatedSentence, Annotator, Relation, RuleAnnotator};

#[derive(Serialize, Deserialize)]
struct WireToken {
    surface: String,
    pos: PosTag,
    number: Number,
    gender: Gender,
}

#[derive(Serialize, Deserialize)]
struct WireSentence {
    tokens: Vec<WireToken>,
    relations: Vec<Relation>,
}

pub fn render_response(s: &AnnotatedSentence) -> String {
    let wire = WireSentence {
        tokens: s
            .tokens
            .iter()
            .map(|t| WireToken { surface: t.surface.clone(), pos: t.pos, number: t.number, gender: t.gender })
            .collect(),
        relations: s.relations.clone(),
    };
    serde_json::to_string(&wire).expect("wire sentence serializes")
}

pub fn parse_response(line: &str, source_id: &str) -> Result<AnnotatedSentence, AnnotateError> {
    let wire: WireSentence =
        serde_json::from_str(line).map_err(|e| AnnotateError::Protocol(e.to_string()))?;
    if wire.tokens.is_empty() {
        return Err(AnnotateError::EmptyInput);
    }
    if let Some(t) = wire.tokens.iter().find(|t| t.surface.is_empty()) {
        return Err(AnnotateError::Protocol(format!("empty token surface ({:?})", t.pos)));
    }
    let tokens = wire
        .tokens
        .into_iter()
        .enumerate()
        .map(|(index, t)| Token { surface: t.surface, index, pos: t.pos, number: t.number, gender: t.gender })
        .collect();
    let s = AnnotatedSentence { tokens, relations: wire.relations, source_id: source_id.to_string() };
    s.check()?;
    Ok(s)
}

/// Answers the protocol with the rule annotator until `input` ends.
/// Returns the number of sentences served.
pub fn serve_protocol(input: impl BufRead, mut output: impl Write, annotator: &RuleAnnotator) -> io::Result<usize> {
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        let response = match annotator.annotate_text(&line, "stdin") {
            Ok(s) => render_response(&s),
            Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
        };
        writeln!(output, "{response}")?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}

/// Annotator backed by a child process speaking the line protocol.
pub struct ExternalAnnotator {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalAnnotator {
    pub fn spawn(program: &str, args: &[&str]) -> io::Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalAnnotator { child, stdin, stdout })
    }
}

impl Annotator for ExternalAnnotator {
    fn annotate(&mut self, text: &str, source_id: &str) -> Result<AnnotatedSentence, AnnotateError> {
        if text.trim().is_empty() {
            return Err(AnnotateError::EmptyInput);
        }
        let io_err = |e: io::Error| AnnotateError::Io(e.to_string());
        writeln!(self.stdin, "{}", text.replace('\n', " ")).map_err(io_err)?;
        self.stdin.flush().map_err(io_err)?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line).map_err(io_err)? == 0 {
            return Err(AnnotateError::Io("annotator closed its output".into()));
        }
        parse_response(line.trim_end(), source_id)
    }
}

impl Drop for ExternalAnnotator {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::fixtures::MARTIAL_ARTIST_SENTENCE;

    #[test]
    fn render_parse_roundtrip() {
        let s = RuleAnnotator::default().annotate_text(MARTIAL_ARTIST_SENTENCE, "x:1").unwrap();
        let back = parse_response(&render_response(&s), "x:1").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_out_of_range_relation() {
        let line = r#"{"tokens":[{"surface":"He","pos":"PRON","number":"singular","gender":"masculine"}],"relations":[[3,0,"subj"]]}"#;
        assert!(matches!(parse_response(line, "x"), Err(AnnotateError::RelationOutOfRange(_))));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_response("not json", "x"), Err(AnnotateError::Protocol(_))));
    }

    #[test]
    fn serve_answers_each_line() {
        let mut out = Vec::new();
        let n = serve_protocol(&b"He slept.\nThe cat sat.\n"[..], &mut out, &RuleAnnotator::default()).unwrap();
        assert_eq!(n, 2);
        let text = String::from_utf8(out).unwrap();
        let first = parse_response(text.lines().next().unwrap(), "s").unwrap();
        assert_eq!(first.tokens.len(), 3);
    }
}
