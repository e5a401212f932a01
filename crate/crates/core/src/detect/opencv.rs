//! Conversion from OpenCV `haarcascade_*.xml` files (the `opencv-cascade-classifier` layout).
//!
//! Only stump trees and upright features are accepted. OpenCV compares
//! `feature / (A·σ)` against its node threshold, with `A` the area of the
//! window shrunk by one pixel on each side; our trees compare
//! `feature / (scale²·σ)`, so thresholds are multiplied by `(W−2)(H−2)`.
//! The left leaf is taken when the feature falls below the threshold, which
//! makes it our `fail` value.

use roxmltree::{Document, Node};

use super::{Cascade, Stage, Tree, WeightedRect};
use crate::error::{Error, Result};
use crate::ingest::Rect;

fn err(msg: impl Into<String>) -> Error {
    Error::Cascade(msg.into())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Result<Node<'a, 'i>> {
    node.children()
        .find(|c| c.has_tag_name(name))
        .ok_or_else(|| err(format!("<{}> lacks <{name}>", node.tag_name().name())))
}

fn items<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|c| c.has_tag_name("_"))
}

fn numbers(node: Node) -> Result<Vec<f64>> {
    node.text()
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad number {t:?}"))))
        .collect()
}

fn scalar(node: Node, name: &str) -> Result<f64> {
    let v = numbers(child(node, name)?)?;
    match v[..] {
        [x] => Ok(x),
        _ => Err(err(format!("<{name}> should hold one number"))),
    }
}

pub fn convert_opencv_xml(xml: &str) -> Result<Cascade> {
    let doc = Document::parse(xml).map_err(|e| err(format!("XML: {e}")))?;
    let root = doc
        .descendants()
        .find(|n| n.has_tag_name("cascade"))
        .ok_or_else(|| err("no <cascade> element (legacy layouts are not supported)"))?;
    if let Ok(ft) = child(root, "featureType") {
        if ft.text().map(str::trim) != Some("HAAR") {
            return Err(err(format!("feature type {:?} is not HAAR", ft.text().unwrap_or(""))));
        }
    }
    let w = scalar(root, "width")? as usize;
    let h = scalar(root, "height")? as usize;
    if w < 3 || h < 3 {
        return Err(err("window must be at least 3x3"));
    }
    let area_norm = ((w - 2) * (h - 2)) as f64;

    let mut features = Vec::new();
    for (fi, f) in items(child(root, "features")?).enumerate() {
        if let Ok(t) = child(f, "tilted") {
            if t.text().map(str::trim) == Some("1") {
                return Err(err(format!("feature {fi} is tilted")));
            }
        }
        let rects = items(child(f, "rects")?)
            .map(|r| {
                let v = numbers(r)?;
                let [x, y, rw, rh, weight] = v[..] else {
                    return Err(err(format!("feature {fi}: rect needs 5 numbers")));
                };
                if [x, y, rw, rh].iter().any(|c| *c < 0.0 || c.fract() != 0.0) {
                    return Err(err(format!("feature {fi}: rect coordinates must be non-negative integers")));
                }
                Ok(WeightedRect {
                    rect: Rect::new(x as usize, y as usize, rw as usize, rh as usize),
                    weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        features.push(rects);
    }

    let mut stages = Vec::new();
    for (si, s) in items(child(root, "stages")?).enumerate() {
        let threshold = scalar(s, "stageThreshold")?;
        let mut trees = Vec::new();
        for weak in items(child(s, "weakClassifiers")?) {
            let nodes = numbers(child(weak, "internalNodes")?)?;
            let leaves = numbers(child(weak, "leafValues")?)?;
            let (&[_, _, fidx, node_thr], &[left, right]) = (&nodes[..], &leaves[..]) else {
                return Err(err(format!("stage {si}: only single-split trees are supported")));
            };
            let feature = features
                .get(fidx as usize)
                .ok_or_else(|| err(format!("stage {si}: feature index {fidx} out of range")))?
                .clone();
            trees.push(Tree {
                feature,
                threshold: node_thr * area_norm,
                pass_value: right,
                fail_value: left,
            });
        }
        stages.push(Stage { threshold, trees });
    }
    Cascade::new(w, h, stages)
}

#[cfg(test)]
mod tests {
    use super::*;

    const XML: &str = r#"<?xml version="1.0"?>
<opencv_storage>
<cascade type_id="opencv-cascade-classifier"><stageType>BOOST</stageType>
  <featureType>HAAR</featureType>
  <height>24</height>
  <width>24</width>
  <stageNum>1</stageNum>
  <stages>
    <_>
      <maxWeakCount>2</maxWeakCount>
      <stageThreshold>-1.5</stageThreshold>
      <weakClassifiers>
        <_>
          <internalNodes>
            0 -1 0 -3.15e-02</internalNodes>
          <leafValues>
            2.0875 -2.2172</leafValues></_>
        <_>
          <internalNodes>
            0 -1 1 1.25e-02</internalNodes>
          <leafValues>
            -1.5 0.75</leafValues></_></weakClassifiers></_></stages>
  <features>
    <_>
      <rects>
        <_>
          6 4 12 9 -1.</_>
        <_>
          6 7 12 3 3.</_></rects></_>
    <_>
      <rects>
        <_>
          0 0 24 12 -1.</_>
        <_>
          0 12 24 12 1.</_></rects></_></features></cascade>
</opencv_storage>
"#;

    #[test]
    fn converts_stumps() {
        let c = convert_opencv_xml(XML).unwrap();
        assert_eq!((c.window_w, c.window_h), (24, 24));
        assert_eq!(c.stages.len(), 1);
        let t = &c.stages[0].trees[0];
        assert_eq!(t.feature[1].rect, Rect::new(6, 7, 12, 3));
        assert_eq!(t.feature[1].weight, 3.0);
        assert!((t.threshold - (-3.15e-2 * 484.0)).abs() < 1e-12);
        assert_eq!((t.fail_value, t.pass_value), (2.0875, -2.2172));
        assert_eq!(c.stages[0].trees[1].fail_value, -1.5);
    }

    #[test]
    fn rejects_tilted_and_deep_trees() {
        let tilted = XML.replacen("</rects></_>", "</rects><tilted>1</tilted></_>", 1);
        assert!(convert_opencv_xml(&tilted).is_err());
        let deep = XML.replace("0 -1 0 -3.15e-02", "1 -1 0 -3.15e-02 0 -2 1 0.5");
        assert!(convert_opencv_xml(&deep).is_err());
        assert!(convert_opencv_xml("<opencv_storage/>").is_err());
    }
}
