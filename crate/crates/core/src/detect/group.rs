use crate::error::{Error, Result};
use crate::ingest::Rect;

fn similar(a: &Rect, b: &Rect, eps: f64) -> bool {
    let delta = eps * (a.w.min(b.w) + a.h.min(b.h)) as f64 * 0.5;
    let close = |p: usize, q: usize| (p as f64 - q as f64).abs() <= delta;
    close(a.x, b.x) && close(a.y, b.y) && close(a.right(), b.right()) && close(a.bottom(), b.bottom())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn rounded_mean(sum: usize, n: usize) -> usize {
    (2 * sum + n) / (2 * n)
}

/// Clusters near-identical detections and averages each surviving cluster.
///
/// Two rects are neighbours when all four edges differ by at most
/// `eps · (min w + min h) / 2`; clusters are the transitive closure. Clusters
/// smaller than `min_neighbors + 1` are dropped. Output is sorted by
/// descending area, then by position.
pub fn group_rects(candidates: &[Rect], min_neighbors: usize, eps: f64) -> Result<Vec<Rect>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("group eps must lie in (0, 1), got {eps}")));
    }
    let n = candidates.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if similar(&candidates[i], &candidates[j], eps) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    // per root: count, Σx, Σy, Σright, Σbottom
    let mut acc = vec![[0usize; 5]; n];
    for (i, r) in candidates.iter().enumerate() {
        let root = find(&mut parent, i);
        let a = &mut acc[root];
        a[0] += 1;
        a[1] += r.x;
        a[2] += r.y;
        a[3] += r.right();
        a[4] += r.bottom();
    }
    let mut out: Vec<Rect> = acc
        .iter()
        .filter(|a| a[0] > 0 && a[0] > min_neighbors)
        .map(|a| {
            let (x, y) = (rounded_mean(a[1], a[0]), rounded_mean(a[2], a[0]));
            let (r, b) = (rounded_mean(a[3], a[0]), rounded_mean(a[4], a[0]));
            Rect::new(x, y, r - x, b - y)
        })
        .collect();
    sort_by_area(&mut out);
    Ok(out)
}

pub(crate) fn sort_by_area(rects: &mut [Rect]) {
    rects.sort_by(|a, b| b.area().cmp(&a.area()).then_with(|| (a.y, a.x, a.w).cmp(&(b.y, b.x, b.w))));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_collapse() {
        let r = Rect::new(5, 6, 20, 22);
        assert_eq!(group_rects(&[r, r, r], 2, 0.2).unwrap(), vec![r]);
    }

    #[test]
    fn isolated_rect_is_dropped() {
        assert!(group_rects(&[Rect::new(0, 0, 10, 10)], 2, 0.2).unwrap().is_empty());
    }

    #[test]
    fn two_clusters() {
        let a = [Rect::new(10, 10, 20, 20), Rect::new(11, 10, 20, 20), Rect::new(12, 13, 20, 20)];
        let b = [Rect::new(100, 50, 30, 30), Rect::new(102, 52, 30, 30), Rect::new(101, 51, 32, 32)];
        let mut all = a.to_vec();
        all.extend(b);
        let out = group_rects(&all, 2, 0.2).unwrap();
        // means: x 11, y 11, right 31, bottom 31 / x 101, y 51, right 131.67→132, bottom 132
        assert_eq!(out, vec![Rect::new(101, 51, 31, 31), Rect::new(11, 11, 20, 20)]);
    }

    #[test]
    fn bad_eps() {
        assert!(group_rects(&[], 1, 0.0).is_err());
        assert!(group_rects(&[], 1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn output_within_cluster_hull(rects in prop::collection::vec((0usize..60, 0usize..60, 1usize..30, 1usize..30), 0..25), mn in 0usize..3) {
            let rects: Vec<Rect> = rects.into_iter().map(|(x, y, w, h)| Rect::new(x, y, w, h)).collect();
            let out = group_rects(&rects, mn, 0.2).unwrap();
            prop_assert!(out.len() <= rects.len());
            let (lo_x, lo_y) = (rects.iter().map(|r| r.x).min(), rects.iter().map(|r| r.y).min());
            let (hi_r, hi_b) = (rects.iter().map(|r| r.right()).max(), rects.iter().map(|r| r.bottom()).max());
            for o in &out {
                prop_assert!(o.w > 0 && o.h > 0);
                prop_assert!(Some(o.x) >= lo_x && Some(o.y) >= lo_y);
                prop_assert!(Some(o.right()) <= hi_r && Some(o.bottom()) <= hi_b);
            }
        }
    }
}
