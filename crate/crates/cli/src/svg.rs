//! Figures of the unit disk: circle, Carleson boxes, zeros and contours.

use std::f64::consts::TAU;
use std::fmt::Write;

use carleson_kit::disk::Arc;
use num_complex::Complex64;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 0.05;

fn px(z: Complex64) -> (f64, f64) {
    let scale = SIZE / (2.0 + 2.0 * MARGIN);
    ((z.re + 1.0 + MARGIN) * scale, (1.0 + MARGIN - z.im) * scale)
}

fn path_data(points: impl IntoIterator<Item = Complex64>, close: bool) -> String {
    let mut d = String::new();
    for (i, z) in points.into_iter().enumerate() {
        let (x, y) = px(z);
        let _ = write!(d, "{}{x:.3},{y:.3}", if i == 0 { "M" } else { " L" });
    }
    if close {
        d.push_str(" Z");
    }
    d
}

/// Outline of the closed Carleson box over `arc`.
fn box_outline(arc: &Arc) -> Vec<Complex64> {
    let inner = 1.0 - arc.normalized_length().min(1.0);
    let (a, b) = (arc.start_angle(), arc.start_angle() + arc.length());
    let steps = ((arc.length() / TAU) * 256.0).ceil().max(2.0) as usize;
    let mut pts = Vec::with_capacity(2 * steps + 2);
    for k in 0..=steps {
        pts.push(Complex64::from_polar(
            1.0,
            a + (b - a) * k as f64 / steps as f64,
        ));
    }
    for k in (0..=steps).rev() {
        pts.push(Complex64::from_polar(
            inner,
            a + (b - a) * k as f64 / steps as f64,
        ));
    }
    pts
}

#[derive(Debug, Default)]
pub struct DiskFigure {
    pub boxes: Vec<Arc>,
    pub zeros: Vec<Complex64>,
    pub curves: Vec<Vec<Complex64>>,
    pub points: Vec<Complex64>,
}

impl DiskFigure {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let circle: Vec<Complex64> = (0..512)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / 512.0))
            .collect();
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            path_data(circle, true)
        );
        for arc in &self.boxes {
            if arc.is_full() {
                continue;
            }
            let _ = writeln!(
                s,
                r##"<path d="{}" fill="#4a90d9" fill-opacity="0.08" stroke="#4a90d9" stroke-width="0.5"/>"##,
                path_data(box_outline(arc), true)
            );
        }
        for curve in &self.curves {
            let closed = curve.len() > 2 && (curve[0] - curve[curve.len() - 1]).norm() < 1e-12;
            let _ = writeln!(
                s,
                r##"<path d="{}" fill="none" stroke="#c0392b" stroke-width="1"/>"##,
                path_data(curve.iter().copied(), closed)
            );
        }
        for &z in &self.zeros {
            let (x, y) = px(z);
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.3}" cy="{y:.3}" r="2.5" fill="black"/>"#
            );
        }
        for &z in &self.points {
            let (x, y) = px(z);
            let _ = writeln!(
                s,
                r##"<circle cx="{x:.3}" cy="{y:.3}" r="2" fill="none" stroke="#27ae60"/>"##
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_maps_to_centre() {
        let (x, y) = px(Complex64::new(0.0, 0.0));
        assert!((x - SIZE / 2.0).abs() < 1e-9 && (y - SIZE / 2.0).abs() < 1e-9);
    }

    #[test]
    fn figure_contains_each_layer() {
        let fig = DiskFigure {
            boxes: vec![Arc::dyadic(2, 1)],
            zeros: vec![Complex64::new(0.5, 0.0)],
            curves: vec![vec![Complex64::new(0.1, 0.0), Complex64::new(0.2, 0.1)]],
            points: vec![],
        };
        let svg = fig.render();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<path").count(), 3);
        assert_eq!(svg.matches("<circle").count(), 1);
    }
}
