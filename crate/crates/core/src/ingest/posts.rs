use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Days, NaiveDate, Utc};
use chrono_tz::Tz;
use serde::Deserialize;

use crate::error::{Error, Result};

/// One timestamped post.
#[derive(Debug, Clone, PartialEq)]
pub struct PostRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    /// Row in the embedding matrix, set by [`super::join_embeddings`].
    pub embedding_row: Option<usize>,
}

/// Posts that fall on one calendar day of the analysis timezone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyBucket {
    pub date: NaiveDate,
    pub post_count: usize,
    pub embedding_rows: Vec<usize>,
}

#[derive(Deserialize)]
struct RawPost {
    id: serde_json::Value,
    created_at: String,
    content: String,
}

pub fn parse_timezone(name: &str) -> Result<Tz> {
    name.parse::<Tz>()
        .map_err(|_| Error::UnknownTimezone(name.to_string()))
}

/// Reads a JSON-lines posts file (`id`, `created_at`, `content` per line).
///
/// Records come back sorted by timestamp (ties by id). Blank lines are skipped.
pub fn load_posts(path: impl AsRef<Path>, timezone: &str) -> Result<Vec<PostRecord>> {
    let path = path.as_ref();
    parse_timezone(timezone)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut posts = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPost = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, format!("malformed record: {e}")))?;
        let id = match raw.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("id must be a string or number, got {other}"),
                ))
            }
        };
        let timestamp = parse_instant(&raw.created_at)
            .ok_or_else(|| Error::parse(path, line_no, format!("bad timestamp {:?}", raw.created_at)))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        posts.push(PostRecord {
            id,
            timestamp,
            text: raw.content,
            embedding_row: None,
        });
    }
    posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
    Ok(posts)
}

fn parse_instant(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f%:z"))
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// Groups sorted posts into one bucket per local calendar day, filling gaps
/// with empty buckets.
///
/// Rows default to the post's position when it has not been joined to an
/// embedding file yet.
pub fn bucket_daily(posts: &[PostRecord], timezone: &str) -> Result<Vec<DailyBucket>> {
    let tz = parse_timezone(timezone)?;
    let local_date = |p: &PostRecord| p.timestamp.with_timezone(&tz).date_naive();
    let (first, last) = match (posts.first(), posts.last()) {
        (Some(f), Some(l)) => (local_date(f), local_date(l)),
        _ => return Err(Error::NoPosts),
    };
    if last < first {
        return Err(Error::InvalidArgument("posts are not sorted by timestamp".into()));
    }
    let span = (last - first).num_days() as usize + 1;
    let mut buckets: Vec<DailyBucket> = (0..span)
        .map(|d| DailyBucket {
            date: first + Days::new(d as u64),
            post_count: 0,
            embedding_rows: Vec::new(),
        })
        .collect();
    for (i, post) in posts.iter().enumerate() {
        let date = local_date(post);
        let offset = (date - first).num_days();
        if offset < 0 || offset as usize >= span {
            return Err(Error::InvalidArgument("posts are not sorted by timestamp".into()));
        }
        let bucket = &mut buckets[offset as usize];
        bucket.post_count += 1;
        bucket.embedding_rows.push(post.embedding_row.unwrap_or(i));
    }
    Ok(buckets)
}
