use std::ops::{Add, Div, Mul, Neg, Sub};

/// 2D point / vector with the handful of operations the mesh and assembly
/// kernels need. Coordinates are reference-domain or physical lengths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pt {
    pub x: f64,
    pub y: f64,
}

impl Pt {
    pub const fn new(x: f64, y: f64) -> Self {
        Pt { x, y }
    }

    pub const ZERO: Pt = Pt { x: 0.0, y: 0.0 };

    pub fn dot(self, o: Pt) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product, positive when `o` lies
    /// counter-clockwise of `self`.
    pub fn cross(self, o: Pt) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Pt) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Pt {
    type Output = Pt;
    fn add(self, o: Pt) -> Pt {
        Pt::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Pt {
    type Output = Pt;
    fn sub(self, o: Pt) -> Pt {
        Pt::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Pt {
    type Output = Pt;
    fn mul(self, s: f64) -> Pt {
        Pt::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Pt {
    type Output = Pt;
    fn div(self, s: f64) -> Pt {
        Pt::new(self.x / s, self.y / s)
    }
}

impl Neg for Pt {
    type Output = Pt;
    fn neg(self) -> Pt {
        Pt::new(-self.x, -self.y)
    }
}

/// Signed area of a polygon given as a vertex cycle (positive when
/// counter-clockwise), by the shoelace formula.
pub fn polygon_signed_area(verts: &[Pt]) -> f64 {
    let n = verts.len();
    let mut a = 0.0;
    for i in 0..n {
        a += verts[i].cross(verts[(i + 1) % n]);
    }
    0.5 * a
}

/// Centroid of a polygon via the first-moment formula. Requires nonzero area.
pub fn polygon_centroid(verts: &[Pt]) -> Pt {
    let n = verts.len();
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        let w = p.cross(q);
        a += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Pt::new(cx / (3.0 * a), cy / (3.0 * a))
}

/// Maximum pairwise vertex distance.
pub fn polygon_diameter(verts: &[Pt]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            d = d.max(verts[i].dist(verts[j]));
        }
    }
    d
}

/// True if the closed polygon is simple: no two non-adjacent edges intersect
/// and no edge has zero length.
pub fn polygon_is_simple(verts: &[Pt]) -> bool {
    let n = verts.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if verts[i].dist(verts[(i + 1) % n]) == 0.0 {
            return false;
        }
    }
    for i in 0..n {
        let (a1, a2) = (verts[i], verts[(i + 1) % n]);
        for j in (i + 1)..n {
            // skip adjacent edges (shared endpoint)
            if j == i || (j + 1) % n == i || j == (i + 1) % n {
                continue;
            }
            let (b1, b2) = (verts[j], verts[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(a1: Pt, a2: Pt, b1: Pt, b2: Pt) -> bool {
    let d1 = (a2 - a1).cross(b1 - a1);
    let d2 = (a2 - a1).cross(b2 - a1);
    let d3 = (b2 - b1).cross(a1 - b1);
    let d4 = (b2 - b1).cross(a2 - b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    // collinear overlap counts as intersection
    let on = |d: f64, p: Pt, q: Pt, r: Pt| {
        d == 0.0
            && r.x <= p.x.max(q.x)
            && r.x >= p.x.min(q.x)
            && r.y <= p.y.max(q.y)
            && r.y >= p.y.min(q.y)
    };
    on(d1, a1, a2, b1) || on(d2, a1, a2, b2) || on(d3, b1, b2, a1) || on(d4, b1, b2, a2)
}
