//! Time-tag streams: merged, time-ordered detector click records.

use super::ValidationError;

/// One detector click: channel id plus timestamp in integer picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeTag {
    pub channel: u8,
    pub timestamp_ps: i64,
}

/// A time-ordered stream of detector clicks.
///
/// Timestamps are stored separately from channel ids (9 bytes per tag);
/// streams of several 1e7 tags are routine. Timestamps are nondecreasing
/// and confined to `[0, duration_ps]`, and every tag's channel appears in
/// the declared channel table.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTagStream {
    timestamps_ps: Vec<i64>,
    channels: Vec<u8>,
    channel_ids: Vec<u8>,
    duration_ps: i64,
}

impl TimeTagStream {
    pub fn new(
        duration_ps: i64,
        channel_ids: Vec<u8>,
        timestamps_ps: Vec<i64>,
        channels: Vec<u8>,
    ) -> Result<Self, ValidationError> {
        const T: &str = "TimeTagStream";
        if duration_ps < 0 {
            return Err(ValidationError::new(T, "duration_ps", ">= 0", duration_ps));
        }
        if channel_ids.is_empty() {
            return Err(ValidationError::new(T, "channel_ids", "non-empty", "[]"));
        }
        let mut ids = channel_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != channel_ids.len() {
            return Err(ValidationError::new(T, "channel_ids", "unique", format!("{channel_ids:?}")));
        }
        if timestamps_ps.len() != channels.len() {
            return Err(ValidationError::new(
                T,
                "channels",
                "same length as timestamps_ps",
                format!("{} vs {}", channels.len(), timestamps_ps.len()),
            ));
        }
        let mut prev = i64::MIN;
        for (i, &t) in timestamps_ps.iter().enumerate() {
            if t < prev {
                return Err(ValidationError::new(
                    T,
                    "timestamps_ps",
                    "nondecreasing",
                    format!("index {i}: {t} after {prev}"),
                ));
            }
            if t < 0 || t > duration_ps {
                return Err(ValidationError::new(
                    T,
                    "timestamps_ps",
                    "0 <= t <= duration_ps",
                    t,
                ));
            }
            prev = t;
        }
        for (i, ch) in channels.iter().enumerate() {
            if ids.binary_search(ch).is_err() {
                return Err(ValidationError::new(
                    T,
                    "channels",
                    "declared in channel_ids",
                    format!("index {i}: channel {ch}"),
                ));
            }
        }
        Ok(Self {
            timestamps_ps,
            channels,
            channel_ids: ids,
            duration_ps,
        })
    }

    pub fn from_tags(
        duration_ps: i64,
        channel_ids: Vec<u8>,
        tags: Vec<TimeTag>,
    ) -> Result<Self, ValidationError> {
        let timestamps = tags.iter().map(|t| t.timestamp_ps).collect();
        let channels = tags.iter().map(|t| t.channel).collect();
        Self::new(duration_ps, channel_ids, timestamps, channels)
    }

    /// Merges per-channel, individually sorted tag lists into one stream
    /// (k-way merge by timestamp; ties keep the lower channel id first).
    pub fn from_sorted_channels(
        duration_ps: i64,
        per_channel: Vec<(u8, Vec<i64>)>,
    ) -> Result<Self, ValidationError> {
        let total: usize = per_channel.iter().map(|(_, v)| v.len()).sum();
        let mut timestamps = Vec::with_capacity(total);
        let mut channels = Vec::with_capacity(total);
        let mut sources: Vec<(u8, std::iter::Peekable<std::vec::IntoIter<i64>>)> = per_channel
            .iter()
            .map(|(ch, v)| (*ch, v.clone().into_iter().peekable()))
            .collect();
        sources.sort_by_key(|(ch, _)| *ch);
        loop {
            let mut best: Option<(usize, i64)> = None;
            for (idx, (_, it)) in sources.iter_mut().enumerate() {
                if let Some(&t) = it.peek() {
                    if best.map_or(true, |(_, bt)| t < bt) {
                        best = Some((idx, t));
                    }
                }
            }
            match best {
                Some((idx, t)) => {
                    sources[idx].1.next();
                    timestamps.push(t);
                    channels.push(sources[idx].0);
                }
                None => break,
            }
        }
        let channel_ids = sources.iter().map(|(ch, _)| *ch).collect();
        Self::new(duration_ps, channel_ids, timestamps, channels)
    }

    pub fn len(&self) -> usize {
        self.timestamps_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_ps.is_empty()
    }

    pub fn duration_ps(&self) -> i64 {
        self.duration_ps
    }

    /// Declared channel table, sorted ascending.
    pub fn channel_ids(&self) -> &[u8] {
        &self.channel_ids
    }

    pub fn has_channel(&self, channel: u8) -> bool {
        self.channel_ids.binary_search(&channel).is_ok()
    }

    pub fn timestamps_ps(&self) -> &[i64] {
        &self.timestamps_ps
    }

    pub fn channels(&self) -> &[u8] {
        &self.channels
    }

    pub fn tag(&self, index: usize) -> TimeTag {
        TimeTag {
            channel: self.channels[index],
            timestamp_ps: self.timestamps_ps[index],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TimeTag> + '_ {
        self.channels
            .iter()
            .zip(self.timestamps_ps.iter())
            .map(|(&channel, &timestamp_ps)| TimeTag {
                channel,
                timestamp_ps,
            })
    }

    /// Number of tags recorded on `channel`.
    pub fn channel_count(&self, channel: u8) -> usize {
        self.channels.iter().filter(|&&c| c == channel).count()
    }

    /// Mean detected rate on `channel` in Hz (zero for an empty duration).
    pub fn channel_rate_hz(&self, channel: u8) -> f64 {
        if self.duration_ps == 0 {
            return 0.0;
        }
        self.channel_count(channel) as f64 / (self.duration_ps as f64 * 1e-12)
    }

    /// Merges two streams; the result spans the longer duration and the
    /// union of channel tables.
    pub fn merge(&self, other: &TimeTagStream) -> Result<TimeTagStream, ValidationError> {
        let n = self.len() + other.len();
        let mut timestamps = Vec::with_capacity(n);
        let mut channels = Vec::with_capacity(n);
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            if self.timestamps_ps[i] <= other.timestamps_ps[j] {
                timestamps.push(self.timestamps_ps[i]);
                channels.push(self.channels[i]);
                i += 1;
            } else {
                timestamps.push(other.timestamps_ps[j]);
                channels.push(other.channels[j]);
                j += 1;
            }
        }
        timestamps.extend_from_slice(&self.timestamps_ps[i..]);
        channels.extend_from_slice(&self.channels[i..]);
        timestamps.extend_from_slice(&other.timestamps_ps[j..]);
        channels.extend_from_slice(&other.channels[j..]);
        let mut ids = self.channel_ids.clone();
        ids.extend_from_slice(&other.channel_ids);
        ids.sort_unstable();
        ids.dedup();
        TimeTagStream::new(
            self.duration_ps.max(other.duration_ps),
            ids,
            timestamps,
            channels,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(duration: i64, tags: &[(u8, i64)]) -> TimeTagStream {
        TimeTagStream::new(
            duration,
            vec![0, 1],
            tags.iter().map(|&(_, t)| t).collect(),
            tags.iter().map(|&(c, _)| c).collect(),
        )
        .unwrap()
    }

    #[test]
    fn accepts_sorted_tags_and_reports_counts() {
        let s = stream(100, &[(0, 1), (1, 5), (0, 5), (1, 99)]);
        assert_eq!(s.len(), 4);
        assert_eq!(s.channel_count(0), 2);
        assert_eq!(s.channel_count(1), 2);
        assert_eq!(s.tag(1), TimeTag { channel: 1, timestamp_ps: 5 });
    }

    #[test]
    fn rejects_unsorted_tags() {
        let err = TimeTagStream::new(100, vec![0], vec![5, 4], vec![0, 0]).unwrap_err();
        assert_eq!(err.field, "timestamps_ps");
        assert_eq!(err.constraint, "nondecreasing");
    }

    #[test]
    fn rejects_tags_outside_duration() {
        assert!(TimeTagStream::new(100, vec![0], vec![101], vec![0]).is_err());
        assert!(TimeTagStream::new(100, vec![0], vec![-1], vec![0]).is_err());
        assert!(TimeTagStream::new(100, vec![0], vec![100], vec![0]).is_ok());
    }

    #[test]
    fn rejects_undeclared_channel() {
        let err = TimeTagStream::new(100, vec![0, 1], vec![10], vec![2]).unwrap_err();
        assert_eq!(err.field, "channels");
    }

    #[test]
    fn rejects_duplicate_channel_table() {
        assert!(TimeTagStream::new(100, vec![0, 0], vec![], vec![]).is_err());
    }

    #[test]
    fn merge_preserves_order_and_unions_channels() {
        let a = stream(100, &[(0, 1), (0, 50)]);
        let b = TimeTagStream::new(200, vec![2], vec![25, 60], vec![2, 2]).unwrap();
        let m = a.merge(&b).unwrap();
        assert_eq!(m.duration_ps(), 200);
        assert_eq!(m.channel_ids(), &[0, 1, 2]);
        let ts: Vec<i64> = m.iter().map(|t| t.timestamp_ps).collect();
        assert_eq!(ts, vec![1, 25, 50, 60]);
    }

    #[test]
    fn kway_merge_from_sorted_channels() {
        let s = TimeTagStream::from_sorted_channels(
            100,
            vec![(1, vec![3, 7]), (0, vec![2, 7, 90])],
        )
        .unwrap();
        let tags: Vec<(u8, i64)> = s.iter().map(|t| (t.channel, t.timestamp_ps)).collect();
        // tie at 7 resolves to the lower channel id
        assert_eq!(tags, vec![(0, 2), (1, 3), (0, 7), (1, 7), (0, 90)]);
    }
}
