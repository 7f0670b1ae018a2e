//! Near-duplicate frame removal via 64-bit average hashes.
//!
//! Stand-in for learned similarity clustering: deterministic, dependency
//! free, and good enough to collapse near-identical frames within a video.

use std::collections::BTreeMap;

use crate::frame::Frame;
use crate::io::manifest::SampleManifest;
use crate::FrameProvider;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuplicateFilterParams {
    /// Hash grid side; 8 gives the 64-bit average hash.
    pub hash_size: u32,
    pub hamming_threshold: u32,
}

impl Default for DuplicateFilterParams {
    fn default() -> Self {
        DuplicateFilterParams { hash_size: 8, hamming_threshold: 5 }
    }
}

/// 64-bit average hash: box-average the luma plane down to 8x8, threshold
/// each cell strictly above the 64-cell mean.
pub fn average_hash(frame: &Frame) -> u64 {
    let luma = frame.to_luma();
    let bytes = luma.pixels.bytes();
    let w = luma.width as u64;
    let h = luma.height as u64;
    let mut cells = [0u64; 64];
    for (i, cell) in cells.iter_mut().enumerate() {
        let gx = (i % 8) as u64;
        let gy = (i / 8) as u64;
        // images narrower than the grid reuse pixels in several cells
        let x0 = (gx * w / 8).min(w - 1);
        let x1 = ((gx + 1) * w / 8).max(x0 + 1);
        let y0 = (gy * h / 8).min(h - 1);
        let y1 = ((gy + 1) * h / 8).max(y0 + 1);
        let mut sum = 0u64;
        for y in y0..y1 {
            for x in x0..x1 {
                sum += bytes[(y * w + x) as usize] as u64;
            }
        }
        *cell = sum / ((x1 - x0) * (y1 - y0));
    }
    let mean = cells.iter().sum::<u64>() / 64;
    let mut hash = 0u64;
    for (i, &c) in cells.iter().enumerate() {
        if c > mean {
            hash |= 1 << i;
        }
    }
    hash
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

#[derive(Debug, Clone, Default)]
pub struct DedupReport {
    /// (video_id, frame_index, cluster_id) for every removed entry
    pub removed: Vec<(u32, u32, usize)>,
    pub warnings: Vec<String>,
}

/// Cluster each video's selected frames by transitive hash closeness and
/// keep only the earliest frame per cluster. Negative entries are not
/// touched.
pub fn filter_duplicates<P: FrameProvider>(
    manifest: &SampleManifest,
    provider: &P,
    params: &DuplicateFilterParams,
) -> (SampleManifest, DedupReport) {
    let mut report = DedupReport::default();
    let mut keep = vec![true; manifest.entries.len()];

    // hash every readable non-negative entry, grouped per video
    let mut per_video: BTreeMap<u32, Vec<(u32, usize, u64)>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        if e.is_negative {
            continue;
        }
        match provider.frame(e.video_id, e.frame_index) {
            Ok(frame) => {
                per_video
                    .entry(e.video_id)
                    .or_default()
                    .push((e.frame_index, i, average_hash(&frame)));
            }
            Err(err) => {
                keep[i] = false;
                report.warnings.push(format!(
                    "video {} frame {}: unreadable, dropped ({err})",
                    e.video_id, e.frame_index
                ));
            }
        }
    }

    let mut cluster_id = 0usize;
    for (_, mut entries) in per_video {
        entries.sort_unstable();
        let n = entries.len();
        // union-find over transitive closeness
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for a in 0..n {
            for b in a + 1..n {
                if hamming(entries[a].2, entries[b].2) <= params.hamming_threshold {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        // entries are frame-index sorted, so a cluster's first member is
        // its earliest frame and becomes the keeper
        let mut cluster_of_root: BTreeMap<usize, usize> = BTreeMap::new();
        for a in 0..n {
            let root = find(&mut parent, a);
            match cluster_of_root.get(&root) {
                Some(&id) => {
                    let (frame_index, entry_i, _) = entries[a];
                    keep[entry_i] = false;
                    report
                        .removed
                        .push((manifest.entries[entry_i].video_id, frame_index, id));
                }
                None => {
                    cluster_of_root.insert(root, cluster_id);
                    cluster_id += 1;
                }
            }
        }
    }

    let mut out = SampleManifest::new(manifest.seed, manifest.mode);
    out.tool_version = manifest.tool_version.clone();
    for (i, e) in manifest.entries.iter().enumerate() {
        if keep[i] {
            out.entries.push(e.clone());
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::manifest::{ManifestEntry, SampleMode, Split};
    use crate::test_support::MapProvider;

    fn entry(video: u32, frame: u32) -> ManifestEntry {
        ManifestEntry {
            video_id: video,
            frame_index: frame,
            category: None,
            split: Split::None,
            is_negative: false,
            provenance: String::new(),
        }
    }

    fn manifest(entries: Vec<ManifestEntry>) -> SampleManifest {
        let mut m = SampleManifest::new(0, SampleMode::Balanced);
        m.entries = entries;
        m
    }

    fn gradient_frame(video: u32, idx: u32, tweak: impl Fn(usize, u8) -> u8) -> Frame {
        let pixels: Vec<u8> = (0..256usize).map(|i| tweak(i, (i % 256) as u8)).collect();
        Frame::new_luma(video, idx, 16, 16, pixels).unwrap()
    }

    #[test]
    fn identical_frames_collapse() {
        let f = gradient_frame(1, 0, |_, v| v);
        let mut provider = MapProvider::default();
        provider.insert(1, 0, f.clone());
        provider.insert(1, 5, Frame { frame_index: 5, ..f });
        let (out, report) = filter_duplicates(
            &manifest(vec![entry(1, 0), entry(1, 5)]),
            &provider,
            &DuplicateFilterParams::default(),
        );
        assert_eq!(out.entries.len(), 1);
        assert_eq!(out.entries[0].frame_index, 0, "earliest kept");
        assert_eq!(report.removed.len(), 1);
    }

    #[test]
    fn distinct_frames_survive() {
        let mut provider = MapProvider::default();
        provider.insert(1, 0, gradient_frame(1, 0, |_, v| v));
        // reversed gradient has a far-away hash
        provider.insert(1, 5, gradient_frame(1, 5, |_, v| 255 - v));
        let (out, _) = filter_duplicates(
            &manifest(vec![entry(1, 0), entry(1, 5)]),
            &provider,
            &DuplicateFilterParams::default(),
        );
        assert_eq!(out.entries.len(), 2);
    }

    #[test]
    fn transitive_closure_merges_chains() {
        // A within threshold of B, B of C, but A of C only transitively
        let base = gradient_frame(1, 0, |_, v| v);
        let mid = gradient_frame(1, 1, |i, v| if i < 48 { 255 - v } else { v });
        let far = gradient_frame(1, 2, |i, v| if i < 96 { 255 - v } else { v });
        let (ha, hb, hc) = (average_hash(&base), average_hash(&mid), average_hash(&far));
        let t = hamming(ha, hb).max(hamming(hb, hc));
        assert!(hamming(ha, hc) > t, "construction must need transitivity");
        let mut provider = MapProvider::default();
        provider.insert(1, 0, base);
        provider.insert(1, 1, mid);
        provider.insert(1, 2, far);
        let params = DuplicateFilterParams { hash_size: 8, hamming_threshold: t };
        let (out, _) = filter_duplicates(
            &manifest(vec![entry(1, 0), entry(1, 1), entry(1, 2)]),
            &provider,
            &params,
        );
        assert_eq!(out.entries.len(), 1);
    }

    #[test]
    fn scope_is_within_video() {
        let f = gradient_frame(1, 0, |_, v| v);
        let mut provider = MapProvider::default();
        provider.insert(1, 0, f.clone());
        provider.insert(2, 0, Frame { video_id: 2, ..f });
        let (out, _) = filter_duplicates(
            &manifest(vec![entry(1, 0), entry(2, 0)]),
            &provider,
            &DuplicateFilterParams::default(),
        );
        assert_eq!(out.entries.len(), 2, "identical frames in different videos both kept");
    }

    #[test]
    fn filter_is_idempotent() {
        let mut provider = MapProvider::default();
        for i in 0..6u32 {
            provider.insert(1, i, gradient_frame(1, i, move |p, v| if p < 16 * i as usize { 255 - v } else { v }));
        }
        let m = manifest((0..6).map(|i| entry(1, i)).collect());
        let params = DuplicateFilterParams { hash_size: 8, hamming_threshold: 12 };
        let (once, _) = filter_duplicates(&m, &provider, &params);
        let (twice, report) = filter_duplicates(&once, &provider, &params);
        assert_eq!(once.entries, twice.entries);
        assert!(report.removed.is_empty());
    }

    #[test]
    fn unreadable_frames_drop_with_warning() {
        let provider = MapProvider::default();
        let (out, report) = filter_duplicates(
            &manifest(vec![entry(1, 0)]),
            &provider,
            &DuplicateFilterParams::default(),
        );
        assert!(out.entries.is_empty());
        assert_eq!(report.warnings.len(), 1);
    }
}
