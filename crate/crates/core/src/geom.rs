//! Box geometry shared across the tracker, proposal generation, and
//! evaluation: center-based 4-DoF boxes and top-left rectangles.

/// Axis-aligned box in the 4-DoF state space: center position plus width and
/// height, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Bbox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    pub fn from_rect(r: Rect) -> Self {
        Self {
            cx: r.x + r.w / 2.0,
            cy: r.y + r.h / 2.0,
            w: r.w,
            h: r.h,
        }
    }

    pub fn to_rect(self) -> Rect {
        Rect {
            x: self.cx - self.w / 2.0,
            y: self.cy - self.h / 2.0,
            w: self.w,
            h: self.h,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0
            && self.h > 0.0
            && self.cx.is_finite()
            && self.cy.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
    }

    /// Clamps the center into [0, w)×[0, h) frame bounds.
    pub fn clamp_center(mut self, frame_w: usize, frame_h: usize) -> Self {
        self.cx = self.cx.clamp(0.0, (frame_w.max(1) - 1) as f64);
        self.cy = self.cy.clamp(0.0, (frame_h.max(1) - 1) as f64);
        self
    }
}

/// Axis-aligned rectangle in top-left convention (benchmark ground-truth
/// layout), in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }

    /// True when `other` lies entirely inside `self`.
    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.x + other.w <= self.x + self.w
            && other.y + other.h <= self.y + self.h
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        (x1 - x0).max(0.0) * (y1 - y0).max(0.0)
    }
}

/// Intersection over union of two rectangles, in [0, 1].
pub fn iou(a: Rect, b: Rect) -> f64 {
    let inter = a.intersection_area(&b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Euclidean distance between rectangle centers, in pixels.
pub fn center_error(a: Rect, b: Rect) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_identity_and_disjoint() {
        let b = Rect::new(3.0, 4.0, 10.0, 5.0);
        assert_eq!(iou(b, b), 1.0);
        assert_eq!(iou(b, Rect::new(100.0, 100.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn iou_hand_computed_third() {
        let a = Rect::new(0.0, 0.0, 2.0, 2.0);
        let b = Rect::new(1.0, 0.0, 2.0, 2.0);
        assert!((iou(a, b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iou_symmetric_and_translation_invariant() {
        let a = Rect::new(0.0, 0.0, 4.0, 3.0);
        let b = Rect::new(2.0, 1.0, 4.0, 3.0);
        assert_eq!(iou(a, b), iou(b, a));
        let shift = |r: Rect| Rect::new(r.x + 11.5, r.y - 3.25, r.w, r.h);
        assert!((iou(a, b) - iou(shift(a), shift(b))).abs() < 1e-12);
    }

    #[test]
    fn center_error_345() {
        let a = Rect::new(0.0, 0.0, 2.0, 2.0);
        let b = Rect::new(3.0, 4.0, 2.0, 2.0);
        assert!((center_error(a, b) - 5.0).abs() < 1e-12);
        assert_eq!(center_error(a, b), center_error(b, a));
        assert_eq!(center_error(a, a), 0.0);
    }

    #[test]
    fn bbox_rect_round_trip() {
        let b = Bbox::new(10.0, 20.0, 6.0, 8.0);
        let r = b.to_rect();
        assert_eq!(r, Rect::new(7.0, 16.0, 6.0, 8.0));
        assert_eq!(Bbox::from_rect(r), b);
    }
}
