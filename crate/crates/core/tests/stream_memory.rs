//! Checks that tag files are readable record-by-record without pulling
//! the whole file into memory. A counting allocator tracks live heap
//! bytes while a file holding two million records is folded down to a
//! coincidence count; the high-water mark must stay far below the file
//! size.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use photonlab::io::{write_time_tags_streamed, TagFileReader};
use photonlab::types::TimeTag;

struct CountingAllocator;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let live = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(live, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOCATOR: CountingAllocator = CountingAllocator;

#[test]
fn two_million_tags_stream_through_bounded_memory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("large.ttg");

    const N: i64 = 2_000_000;
    let duration_ps = N * 1_000;
    let tags = (0..N).map(|i| TimeTag {
        channel: (i % 2) as u8,
        timestamp_ps: i * 1_000,
    });
    write_time_tags_streamed(&path, duration_ps, vec![0, 1], tags).unwrap();

    let file_size = std::fs::metadata(&path).unwrap().len();
    assert!(file_size > 17_000_000, "file is {file_size} bytes");

    let baseline = LIVE.load(Ordering::Relaxed);
    PEAK.store(baseline, Ordering::Relaxed);

    let reader = TagFileReader::open(&path).unwrap();
    let mut n = 0u64;
    let mut per_channel = [0u64; 2];
    for tag in reader {
        let tag = tag.unwrap();
        n += 1;
        per_channel[tag.channel as usize] += 1;
    }
    let peak_above_baseline = PEAK.load(Ordering::Relaxed) - baseline;

    assert_eq!(n, N as u64);
    assert_eq!(per_channel, [N as u64 / 2, N as u64 / 2]);
    assert!(
        peak_above_baseline < 4_000_000,
        "reading allocated {peak_above_baseline} bytes at peak for an {file_size}-byte file"
    );
}
