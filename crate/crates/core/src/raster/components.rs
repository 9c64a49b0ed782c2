use super::BinImage;

/// Inclusive-exclusive pixel rectangle `[x, x + width) x [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl PixelRect {
    pub fn x1(&self) -> usize {
        self.x + self.width
    }

    pub fn y1(&self) -> usize {
        self.y + self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, other: &PixelRect) -> PixelRect {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        PixelRect { x, y, width: self.x1().max(other.x1()) - x, height: self.y1().max(other.y1()) - y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub bbox: PixelRect,
    /// Ink pixel count.
    pub area: usize,
}

/// 8-connected components of ink, ordered by their first pixel in raster order.
pub fn connected_components(bin: &BinImage) -> Vec<Component> {
    label_components(bin).1
}

/// Like [`connected_components`], also returning a per-pixel label map where
/// 0 is background and `k` is the k-th returned component (1-based).
pub fn label_components(bin: &BinImage) -> (Vec<u32>, Vec<Component>) {
    let (w, h) = (bin.width(), bin.height());
    let bits = bin.bits();
    let mut labels = vec![0u32; w * h];
    // Provisional labels, union-find over them (index 0 unused).
    let mut parent: Vec<u32> = vec![0];

    fn find(parent: &mut [u32], mut a: u32) -> u32 {
        while parent[a as usize] != a {
            parent[a as usize] = parent[parent[a as usize] as usize];
            a = parent[a as usize];
        }
        a
    }

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !bits[i] {
                continue;
            }
            // Already-visited neighbors: W, NW, N, NE.
            let mut first = 0u32;
            let mut neighbors = [0u32; 4];
            if x > 0 {
                neighbors[0] = labels[i - 1];
            }
            if y > 0 {
                if x > 0 {
                    neighbors[1] = labels[i - w - 1];
                }
                neighbors[2] = labels[i - w];
                if x + 1 < w {
                    neighbors[3] = labels[i - w + 1];
                }
            }
            for &n in neighbors.iter().filter(|&&n| n != 0) {
                if first == 0 {
                    first = n;
                } else {
                    let (ra, rb) = (find(&mut parent, first), find(&mut parent, n));
                    if ra != rb {
                        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                        parent[hi as usize] = lo;
                    }
                }
            }
            if first == 0 {
                first = parent.len() as u32;
                parent.push(first);
            }
            labels[i] = first;
        }
    }

    // Resolve roots to dense labels in order of first appearance.
    let mut dense = vec![0u32; parent.len()];
    let mut comps: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if labels[i] == 0 {
                continue;
            }
            let root = find(&mut parent, labels[i]) as usize;
            if dense[root] == 0 {
                comps.push(Component { bbox: PixelRect { x, y, width: 1, height: 1 }, area: 0 });
                dense[root] = comps.len() as u32;
            }
            let k = dense[root];
            labels[i] = k;
            let c = &mut comps[k as usize - 1];
            c.area += 1;
            c.bbox = c.bbox.union(&PixelRect { x, y, width: 1, height: 1 });
        }
    }
    (labels, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_has_no_components() {
        assert!(connected_components(&BinImage::empty(8, 8)).is_empty());
    }

    #[test]
    fn single_block() {
        let mut m = BinImage::empty(10, 10);
        for y in 4..7 {
            for x in 2..5 {
                m.set(x, y, true);
            }
        }
        let cc = connected_components(&m);
        assert_eq!(cc, vec![Component { bbox: PixelRect { x: 2, y: 4, width: 3, height: 3 }, area: 9 }]);
    }

    #[test]
    fn diagonal_touch_is_connected_and_u_shape_merges() {
        let mut m = BinImage::empty(5, 5);
        m.set(0, 0, true);
        m.set(1, 1, true);
        // U shape: two arms joined at the bottom.
        for y in 2..5 {
            m.set(2, y, true);
            m.set(4, y, true);
        }
        m.set(3, 4, true);
        let cc = connected_components(&m);
        assert_eq!(cc.len(), 1, "{cc:?}");
        assert_eq!(cc[0].area, 9);
    }
}
