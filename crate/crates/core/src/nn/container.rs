//! Model container: a UTF-8 manifest followed by a binary payload.
//!
//! ```text
//! UGLSEG-CONTAINER 1
//! meta <key> <value>
//! text <section> <line>
//! tensor <name> <d0>x<d1>... f32
//! payload <byte count>
//! <little-endian f32 values of every tensor, in manifest order>
//! ```

use std::io::{BufRead, Read, Write};

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &str = "UGLSEG-CONTAINER";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Container {
    pub meta: Vec<(String, String)>,
    /// Named multi-line text sections.
    pub texts: Vec<(String, String)>,
    pub tensors: Vec<(String, Tensor)>,
}

fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        line,
        msg: msg.into(),
    }
}

fn check_token(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains(char::is_whitespace) {
        return Err(Error::Structure(format!("{kind} `{s}` must be a non-empty token")));
    }
    Ok(())
}

impl Container {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn text(&self, section: &str) -> Option<&str> {
        self.texts.iter().find(|(k, _)| k == section).map(|(_, v)| v.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(k, _)| k == name).map(|(_, t)| t)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut manifest = format!("{MAGIC} {VERSION}\n");
        for (k, v) in &self.meta {
            check_token("meta key", k)?;
            if v.contains('\n') {
                return Err(Error::Structure(format!("meta `{k}` contains a newline")));
            }
            manifest.push_str(&format!("meta {k} {v}\n"));
        }
        for (section, body) in &self.texts {
            check_token("text section", section)?;
            for line in body.lines() {
                manifest.push_str(&format!("text {section} {line}\n"));
            }
        }
        let mut payload = Vec::new();
        for (name, t) in &self.tensors {
            check_token("tensor name", name)?;
            let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            manifest.push_str(&format!("tensor {name} {} f32\n", dims.join("x")));
            for &x in t.data() {
                payload.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        manifest.push_str(&format!("payload {}\n", payload.len()));
        w.write_all(manifest.as_bytes())?;
        w.write_all(&payload)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = std::io::BufReader::new(r);
        let mut out = Container::default();
        let mut specs: Vec<(String, Vec<usize>)> = Vec::new();
        let mut line_no = 0;
        let mut line = String::new();
        let payload_len = loop {
            line.clear();
            line_no += 1;
            if r.read_line(&mut line)? == 0 {
                return Err(format_err(line_no, "unexpected end of manifest"));
            }
            let l = line.strip_suffix('\n').unwrap_or(&line);
            if line_no == 1 {
                let version = l
                    .strip_prefix(MAGIC)
                    .and_then(|v| v.trim().parse::<u32>().ok())
                    .ok_or_else(|| format_err(1, "missing container header"))?;
                if version != VERSION {
                    return Err(format_err(1, format!("unsupported container version {version}")));
                }
                continue;
            }
            let (kind, rest) = l.split_once(' ').unwrap_or((l, ""));
            match kind {
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    out.meta.push((k.to_string(), v.to_string()));
                }
                "text" => {
                    let (section, body) = rest.split_once(' ').unwrap_or((rest, ""));
                    match out.texts.last_mut() {
                        Some((s, text)) if s == section => {
                            text.push_str(body);
                            text.push('\n');
                        }
                        _ => out.texts.push((section.to_string(), format!("{body}\n"))),
                    }
                }
                "tensor" => {
                    let fields: Vec<&str> = rest.split(' ').collect();
                    let [name, dims, dtype] = fields[..] else {
                        return Err(format_err(line_no, "malformed tensor entry"));
                    };
                    if dtype != "f32" {
                        return Err(format_err(line_no, format!("unsupported dtype {dtype}")));
                    }
                    let shape = if dims.is_empty() {
                        Vec::new()
                    } else {
                        dims.split('x')
                            .map(|d| d.parse::<usize>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| format_err(line_no, format!("bad shape {dims}")))?
                    };
                    specs.push((name.to_string(), shape));
                }
                "payload" => {
                    break rest
                        .parse::<usize>()
                        .map_err(|_| format_err(line_no, "bad payload length"))?;
                }
                _ => return Err(format_err(line_no, format!("unknown manifest entry `{kind}`"))),
            }
        };
        let expected: usize = specs.iter().map(|(_, s)| s.iter().product::<usize>() * 4).sum();
        if expected != payload_len {
            return Err(format_err(line_no, format!("payload {payload_len} bytes, manifest needs {expected}")));
        }
        let mut payload = vec![0u8; payload_len];
        r.read_exact(&mut payload)?;
        let mut floats = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
        for (name, shape) in specs {
            let n = shape.iter().product();
            let data: Vec<f64> = floats.by_ref().take(n).collect();
            out.tensors.push((name, Tensor::new(shape, data)?));
        }
        Ok(out)
    }
}
