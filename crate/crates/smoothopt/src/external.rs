//! Out-of-process objective: the design goes to the child's stdin as one
//! line of space-separated decimals, the child prints one number.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use smoothopt_core::{Error, Objective, Result};
use wait_timeout::ChildExt;

use crate::config::ExternalSpec;
use crate::format::num;

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalObjective {
    pub spec: ExternalSpec,
}

impl ExternalObjective {
    pub fn new(spec: ExternalSpec) -> Self {
        Self { spec }
    }

    pub fn input_line(x: &[f64]) -> String {
        let mut line = x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ");
        line.push('\n');
        line
    }

    fn run(&self, x: &[f64]) -> std::result::Result<f64, String> {
        let mut child = Command::new(&self.spec.command)
            .args(&self.spec.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot start {}: {e}", self.spec.command))?;

        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = std::thread::spawn(move || {
            let mut buf = String::new();
            stdout.read_to_string(&mut buf).map(|_| buf)
        });
        if let Some(mut stdin) = child.stdin.take() {
            // a child that ignores its input may close the pipe early
            let _ = stdin.write_all(Self::input_line(x).as_bytes());
        }

        let timeout = Duration::from_secs_f64(self.spec.timeout_secs);
        let status = match child.wait_timeout(timeout).map_err(|e| e.to_string())? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(format!("timed out after {} s", self.spec.timeout_secs));
            }
        };
        let output = reader.join().map_err(|_| "output reader panicked".to_string())?.map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("exited with {status}"));
        }
        let mut tokens = output.split_whitespace();
        let (Some(token), None) = (tokens.next(), tokens.next()) else {
            return Err(format!("expected exactly one number, got {:?}", output.trim()));
        };
        let value: f64 = token.parse().map_err(|_| format!("unparsable output {token:?}"))?;
        if !value.is_finite() {
            return Err(format!("non-finite output {token:?}"));
        }
        Ok(value)
    }
}

impl Objective for ExternalObjective {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.run(x).map_err(|msg| Error::Evaluation(format!("{}: {msg}", self.spec.command)))
    }
}
