//! SVG drawings of solutions: targets as circles, depots as black squares,
//! one coloured closed polyline per vehicle with a non-empty tour.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Instance, Point, Solution};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const CANVAS: f64 = 600.0;

pub fn vehicle_color(vehicle: usize) -> &'static str {
    PALETTE[vehicle % PALETTE.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
}

impl Frame {
    /// Bounding box of every target and depot, padded by 5% per side.
    fn fit(inst: &Instance) -> Frame {
        let pts = inst.targets().iter().copied().chain(inst.depots());
        let (mut lo, mut hi) = (
            Point::new(f64::MAX, f64::MAX),
            Point::new(f64::MIN, f64::MIN),
        );
        for p in pts {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let pad = 0.05 * extent;
        Frame {
            min_x: lo.x - pad,
            max_y: hi.y + pad,
            scale: CANVAS / (extent + 2.0 * pad),
        }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.min_x) * self.scale,
            (self.max_y - p.y) * self.scale,
        )
    }
}

/// The SVG document for one solution.
pub fn solution_svg(inst: &Instance, sol: &Solution, label: &str) -> String {
    let frame = Frame::fit(inst);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS
    );
    let _ = writeln!(
        svg,
        "<title>{} (objective {:.3})</title>",
        escape(label),
        sol.objective
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for tour in sol.tours.iter().filter(|t| !t.is_depot_only()) {
        let Some(vehicle) = inst.vehicles().get(tour.vehicle) else {
            continue;
        };
        let mut points = String::new();
        let stops = std::iter::once(vehicle.depot)
            .chain(
                tour.order
                    .iter()
                    .filter_map(|&t| inst.targets().get(t).copied()),
            )
            .chain(std::iter::once(vehicle.depot));
        for p in stops {
            let (x, y) = frame.map(p);
            let _ = write!(points, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            svg,
            r#"<g class="tour" data-vehicle="{v}" stroke="{c}" stroke-width="1.5" fill="none"><polyline points="{p}"/></g>"#,
            v = tour.vehicle,
            c = vehicle_color(tour.vehicle),
            p = points.trim_end()
        );
    }

    for (t, &p) in inst.targets().iter().enumerate() {
        let (x, y) = frame.map(p);
        let fill = inst.required_owner(t).map_or("white", vehicle_color);
        let _ = writeln!(
            svg,
            r#"<circle class="target" data-target="{t}" cx="{x:.2}" cy="{y:.2}" r="4" stroke="black" fill="{fill}"/>"#
        );
    }
    for (v, vehicle) in inst.vehicles().iter().enumerate() {
        let (x, y) = frame.map(vehicle.depot);
        let _ = writeln!(
            svg,
            r#"<rect class="depot" data-vehicle="{v}" x="{:.2}" y="{:.2}" width="9" height="9" fill="black"/>"#,
            x - 4.5,
            y - 4.5
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `<prefix>_<label>.svg` for each labelled solution and returns the
/// paths written.
pub fn render_tours(
    inst: &Instance,
    solutions: &[(&str, &Solution)],
    prefix: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(solutions.len());
    for (label, sol) in solutions {
        let mut name = prefix.as_os_str().to_owned();
        name.push(format!("_{label}.svg"));
        let path = PathBuf::from(name);
        std::fs::write(&path, solution_svg(inst, sol, label)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Network, Tour, Vehicle};

    fn inst() -> Instance {
        Instance::new(
            vec![
                Point::new(10.0, 10.0),
                Point::new(50.0, 20.0),
                Point::new(90.0, 80.0),
            ],
            vec![
                Vehicle::new(1.0, Point::new(0.0, 0.0)),
                Vehicle::new(1.5, Point::new(100.0, 0.0)),
                Vehicle::new(2.0, Point::new(50.0, 100.0)),
            ],
            vec![vec![], vec![], vec![2]],
        )
        .unwrap()
    }

    fn count(doc: &roxmltree::Document, tag: &str) -> usize {
        doc.descendants().filter(|n| n.has_tag_name(tag)).count()
    }

    #[test]
    fn one_polyline_group_per_vehicle() {
        let inst = inst();
        let net = Network::new(&inst);
        let sol = Solution::from_tours(vec![
            Tour::timed(&net, 0, vec![0]),
            Tour::timed(&net, 1, vec![1]),
            Tour::timed(&net, 2, vec![2]),
        ]);
        let text = solution_svg(&inst, &sol, "final <3 & more");
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(count(&doc, "polyline"), 3);
        assert_eq!(count(&doc, "circle"), 3);
        let required = doc
            .descendants()
            .find(|n| n.attribute("data-target") == Some("2"))
            .unwrap();
        assert_eq!(required.attribute("fill"), Some(vehicle_color(2)));
    }

    #[test]
    fn depot_only_solution_has_markers_only() {
        let inst = inst();
        let sol = Solution::from_tours((0..3).map(Tour::depot_only).collect());
        let text = solution_svg(&inst, &sol, "empty");
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(count(&doc, "polyline"), 0);
        let depots = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("depot"))
            .count();
        assert_eq!(depots, 3);
    }

    #[test]
    fn writes_one_file_per_label() {
        let inst = inst();
        let sol = Solution::from_tours((0..3).map(Tour::depot_only).collect());
        let dir = std::env::temp_dir().join(format!("mmtsp-render-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let paths =
            render_tours(&inst, &[("init", &sol), ("final", &sol)], &dir.join("run")).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths[1].ends_with("run_final.svg"));
        assert!(paths.iter().all(|p| p.exists()));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unwritable_prefix_is_an_io_error() {
        let inst = inst();
        let sol = Solution::from_tours((0..3).map(Tour::depot_only).collect());
        let err = render_tours(&inst, &[("x", &sol)], Path::new("/nonexistent-dir/p")).unwrap_err();
        assert!(err.is_io());
    }
}
