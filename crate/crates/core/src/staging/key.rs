use std::fmt;
use std::str::FromStr;

use super::StagingError;

/// Number of colon-delimited fields in a key or key template.
pub const KEY_FIELDS: usize = 7;

/// Origin of a staged record: a social streamer, a reputable (high-confidence)
/// streamer, or a named downstream process such as a metadata extractor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamerKind {
    Social,
    Reputable,
    Process(String),
}

impl StreamerKind {
    pub fn as_str(&self) -> &str {
        match self {
            StreamerKind::Social => "ss",
            StreamerKind::Reputable => "rs",
            StreamerKind::Process(name) => name,
        }
    }

    fn from_field(field: String) -> Self {
        match field.as_str() {
            "ss" => StreamerKind::Social,
            "rs" => StreamerKind::Reputable,
            _ => StreamerKind::Process(field),
        }
    }
}

/// A record key in the staging store.
///
/// Serialized as `streamer:lang:topic:src:url:id:timestamp`. Field text is
/// escaped so that `:`, `*` and `%` never appear raw inside a field; a
/// physical sensor without a URL uses the literal `NULL`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StagingKey {
    pub streamer: StreamerKind,
    pub lang: String,
    pub topic: String,
    pub src: String,
    pub url: Option<String>,
    pub id: u64,
    pub timestamp: i64,
}

impl StagingKey {
    pub fn new(
        streamer: StreamerKind,
        lang: impl Into<String>,
        topic: impl Into<String>,
        src: impl Into<String>,
        url: Option<String>,
        id: u64,
        timestamp: i64,
    ) -> Self {
        StagingKey {
            streamer,
            lang: lang.into(),
            topic: topic.into(),
            src: src.into(),
            url,
            id,
            timestamp,
        }
    }

    /// The escaped field strings in serialization order.
    pub fn fields(&self) -> [String; KEY_FIELDS] {
        [
            escape(self.streamer.as_str()),
            escape(&self.lang),
            escape(&self.topic),
            escape(&self.src),
            match &self.url {
                Some(url) => escape(url),
                None => "NULL".to_string(),
            },
            self.id.to_string(),
            self.timestamp.to_string(),
        ]
    }

    /// Identity of the id sequence this key belongs to.
    pub fn sequence(&self) -> (String, String) {
        (self.streamer.as_str().to_string(), self.src.clone())
    }
}

impl fmt::Display for StagingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fields().join(":"))
    }
}

impl FromStr for StagingKey {
    type Err = StagingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != KEY_FIELDS {
            return Err(StagingError::FieldCount { found: parts.len() });
        }
        let field = |index: usize| -> Result<String, StagingError> {
            let raw = parts[index];
            if raw.is_empty() {
                return Err(StagingError::MalformedField { index, reason: "empty field".into() });
            }
            unescape(raw).ok_or_else(|| StagingError::MalformedField {
                index,
                reason: format!("bad escape in {raw:?}"),
            })
        };
        let url = if parts[4] == "NULL" { None } else { Some(field(4)?) };
        let id = parts[5].parse::<u64>().map_err(|_| StagingError::MalformedField {
            index: 5,
            reason: format!("id {:?} is not a non-negative integer", parts[5]),
        })?;
        let timestamp = parts[6].parse::<i64>().map_err(|_| StagingError::MalformedField {
            index: 6,
            reason: format!("timestamp {:?} is not an integer", parts[6]),
        })?;
        let key = StagingKey {
            streamer: StreamerKind::from_field(field(0)?),
            lang: field(1)?,
            topic: field(2)?,
            src: field(3)?,
            url,
            id,
            timestamp,
        };
        // Canonical form only, so parse -> serialize is exact.
        if key.to_string() != s {
            return Err(StagingError::MalformedField {
                index: 0,
                reason: format!("non-canonical key {s:?}"),
            });
        }
        Ok(key)
    }
}

/// One field of a key template.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldPattern {
    Any,
    Literal(String),
}

/// A 7-field key pattern where each field is a literal or `*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyTemplate {
    fields: Vec<FieldPattern>,
}

impl KeyTemplate {
    pub fn parse(pattern: &str) -> Result<Self, StagingError> {
        let parts: Vec<&str> = pattern.split(':').collect();
        if parts.len() != KEY_FIELDS {
            return Err(StagingError::FieldCount { found: parts.len() });
        }
        let fields = parts
            .iter()
            .enumerate()
            .map(|(index, part)| match *part {
                "*" => Ok(FieldPattern::Any),
                "" => Err(StagingError::MalformedField { index, reason: "empty field".into() }),
                lit if lit.contains('*') => Err(StagingError::MalformedField {
                    index,
                    reason: "partial wildcards are not supported".into(),
                }),
                lit => Ok(FieldPattern::Literal(lit.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KeyTemplate { fields })
    }

    /// Literal fields compare case-sensitively against the escaped key field.
    pub fn matches(&self, key: &StagingKey) -> bool {
        self.fields
            .iter()
            .zip(key.fields().iter())
            .all(|(pattern, value)| match pattern {
                FieldPattern::Any => true,
                FieldPattern::Literal(lit) => lit == value,
            })
    }
}

impl fmt::Display for KeyTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self
            .fields
            .iter()
            .map(|p| match p {
                FieldPattern::Any => "*",
                FieldPattern::Literal(lit) => lit.as_str(),
            })
            .collect();
        f.write_str(&parts.join(":"))
    }
}

fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '%' => out.push_str("%25"),
            ':' => out.push_str("%3A"),
            '*' => out.push_str("%2A"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(field: &str) -> Option<String> {
    let mut out = String::with_capacity(field.len());
    let mut rest = field;
    while let Some(pos) = rest.find('%') {
        out.push_str(&rest[..pos]);
        let code = rest.get(pos + 1..pos + 3)?;
        out.push(match code {
            "25" => '%',
            "3A" => ':',
            "2A" => '*',
            _ => return None,
        });
        rest = &rest[pos + 3..];
    }
    if rest.contains('*') {
        return None;
    }
    out.push_str(rest);
    Some(out)
}
