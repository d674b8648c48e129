use std::cell::RefCell;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gaussian radial basis kernel `exp(-gamma * |a - b|^2)`.
pub fn rbf_kernel<T: Scalar>(a: &[T], b: &[T], gamma: T) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "kernel arguments of dimension {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !(gamma > T::zero()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok((-gamma * squared_distance(a, b)).exp())
}

pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// All squared distances between the rows of `a` and the rows of `b`.
pub(crate) fn squared_distances<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Array2<T> {
    let (a, b) = (a.as_standard_layout(), b.as_standard_layout());
    let p = a.ncols();
    let (sa, sb) = (a.as_slice().expect("standard layout"), b.as_slice().expect("standard layout"));
    let mut out = Vec::with_capacity(a.nrows() * b.nrows());
    for ra in sa.chunks_exact(p.max(1)).take(a.nrows()) {
        for rb in sb.chunks_exact(p.max(1)).take(b.nrows()) {
            out.push(squared_distance(ra, rb));
        }
    }
    Array2::from_shape_vec((a.nrows(), b.nrows()), out).expect("shape matches")
}

/// Symmetric pairwise squared distances of the rows of `x`.
pub(crate) fn gram_distances<T: Scalar>(x: ArrayView2<'_, T>) -> Array2<T> {
    let n = x.nrows();
    let p = x.ncols().max(1);
    let x = x.as_standard_layout();
    let s = x.as_slice().expect("standard layout");
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        let ri = &s[i * p..(i + 1) * p];
        for j in (i + 1)..n {
            let d = squared_distance(ri, &s[j * p..(j + 1) * p]);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    Array2::from_shape_vec((n, n), out).expect("shape matches")
}

/// Problems up to this size get a fully materialized kernel matrix.
const DENSE_LIMIT: usize = 2048;
/// Byte budget for cached rows on larger problems.
const CACHE_BYTES: usize = 256 << 20;

enum Distances<'a, T> {
    Rows(ArrayView2<'a, T>),
    Precomputed(&'a Array2<T>),
}

/// Kernel matrix rows for the SMO solver: dense for small problems, an
/// LRU row cache otherwise.
pub(crate) struct KernelRows<'a, T> {
    dist: Distances<'a, T>,
    gamma: T,
    n: usize,
    diag: Vec<T>,
    dense: Option<Array2<T>>,
    cache: RefCell<RowCache<T>>,
}

struct RowCache<T> {
    rows: Vec<Option<Vec<T>>>,
    last_used: Vec<u64>,
    clock: u64,
    resident: usize,
    capacity: usize,
}

impl<'a, T: Scalar> KernelRows<'a, T> {
    pub fn from_data(x: ArrayView2<'a, T>, gamma: T) -> Self {
        Self::build(Distances::Rows(x), x.nrows(), gamma)
    }

    pub fn from_distances(d: &'a Array2<T>, gamma: T) -> Self {
        Self::build(Distances::Precomputed(d), d.nrows(), gamma)
    }

    fn build(dist: Distances<'a, T>, n: usize, gamma: T) -> Self {
        let capacity = (CACHE_BYTES / (n.max(1) * std::mem::size_of::<T>())).clamp(2, n.max(2));
        let mut k = KernelRows {
            dist,
            gamma,
            n,
            diag: Vec::new(),
            dense: None,
            cache: RefCell::new(RowCache {
                rows: Vec::new(),
                last_used: Vec::new(),
                clock: 0,
                resident: 0,
                capacity,
            }),
        };
        k.diag = (0..n)
            .map(|i| match &k.dist {
                Distances::Precomputed(d) => (-gamma * d[[i, i]]).exp(),
                Distances::Rows(_) => T::one(),
            })
            .collect();
        if n <= DENSE_LIMIT {
            let mut m = vec![T::zero(); n * n];
            for i in 0..n {
                m[i * n + i] = k.diag[i];
                for j in (i + 1)..n {
                    let v = k.entry(i, j);
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            k.dense = Some(Array2::from_shape_vec((n, n), m).expect("square"));
        } else {
            let mut c = k.cache.borrow_mut();
            c.rows = vec![None; n];
            c.last_used = vec![0; n];
        }
        k
    }

    fn entry(&self, i: usize, j: usize) -> T {
        let d = match &self.dist {
            Distances::Precomputed(d) => d[[i, j]],
            Distances::Rows(x) => x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .map(|(&p, &q)| (p - q) * (p - q))
                .sum(),
        };
        (-self.gamma * d).exp()
    }

    fn compute_row(&self, i: usize) -> Vec<T> {
        (0..self.n).map(|j| if i == j { self.diag[i] } else { self.entry(i, j) }).collect()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    /// Calls `f` with row `i`.
    pub fn with_row<R>(&self, i: usize, f: impl FnOnce(&[T]) -> R) -> R {
        if let Some(m) = &self.dense {
            return f(m.row(i).as_slice().unwrap());
        }
        self.ensure(i, None);
        let c = self.cache.borrow();
        f(c.rows[i].as_deref().unwrap())
    }

    /// Calls `f` with rows `i` and `j`.
    pub fn with_rows<R>(&self, i: usize, j: usize, f: impl FnOnce(&[T], &[T]) -> R) -> R {
        if let Some(m) = &self.dense {
            let (ri, rj) = (m.row(i), m.row(j));
            return f(ri.as_slice().unwrap(), rj.as_slice().unwrap());
        }
        self.ensure(i, None);
        self.ensure(j, Some(i));
        let c = self.cache.borrow();
        f(c.rows[i].as_deref().unwrap(), c.rows[j].as_deref().unwrap())
    }

    fn ensure(&self, i: usize, pinned: Option<usize>) {
        let mut c = self.cache.borrow_mut();
        c.clock += 1;
        let now = c.clock;
        c.last_used[i] = now;
        if c.rows[i].is_some() {
            return;
        }
        if c.resident >= c.capacity {
            let victim = (0..self.n)
                .filter(|&r| c.rows[r].is_some() && Some(r) != pinned && r != i)
                .min_by_key(|&r| c.last_used[r])
                .expect("cache holds an evictable row");
            c.rows[victim] = None;
            c.resident -= 1;
        }
        drop(c);
        let row = self.compute_row(i);
        let mut c = self.cache.borrow_mut();
        c.rows[i] = Some(row);
        c.resident += 1;
    }
}
