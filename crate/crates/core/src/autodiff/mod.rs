//! Minimal N-D tensor with reverse-mode automatic differentiation.
//!
//! Tensors are NHWC f32 in production; every op is generic over [`Scalar`]
//! so gradient-check tests can run the identical code in f64. Graphs are
//! built eagerly: each op returns a tensor holding its inputs and a backward
//! closure. [`backward`] walks the graph once in reverse topological order
//! with gradients accumulating additively across fan-out.
//!
//! Determinism: all kernels use fixed summation order, so identical inputs
//! produce bit-identical outputs and gradients.

mod check;
mod color;
mod conv;
mod init;
mod norm;
mod ops;

pub use check::{central_diff_check, GradCheckReport};
pub use color::{channel_affine, hsv_to_rgb_t, rgb_to_hsv_t};
pub use conv::{conv2d, nn_upsample2, resize_conv, window_filter};
pub use init::{conv_weight, he_uniform, zero_bias};
pub use norm::{instance_norm, INSTANCE_NORM_EPS};
pub use ops::*;

use std::cell::{Ref, RefCell};
use std::collections::HashSet;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Float;

use crate::error::{Error, Result};

/// Element type of the engine: f32 for production, f64 for gradient checks.
pub trait Scalar:
    Float + num_traits::NumAssignOps + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_f32(v: f32) -> Self;
    fn to_f32(self) -> f32;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f32(v: f32) -> Self {
        v
    }
    fn to_f32(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    fn to_f32(self) -> f32 {
        self as f32
    }
}

/// Tensor extent. Image tensors are (batch, height, width, channels);
/// convolution weights reuse the four slots as (kh, kw, c_in, c_out).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape {
    pub fn new(n: usize, h: usize, w: usize, c: usize) -> Self {
        Self { n, h, w, c }
    }

    pub fn scalar() -> Self {
        Self::new(1, 1, 1, 1)
    }

    pub fn len(&self) -> usize {
        self.n * self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        self.len() == 1
    }
}

impl Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.n, self.h, self.w, self.c)
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

pub(crate) type BackwardFn<S> = Box<dyn Fn(&[S], &[S], &[Tensor<S>])>;

struct Node<S: Scalar> {
    id: u64,
    shape: Shape,
    data: RefCell<Vec<S>>,
    grad: RefCell<Option<Vec<S>>>,
    requires_grad: bool,
    parents: Vec<Tensor<S>>,
    /// Called as `backward(grad_out, out_data, parents)`; accumulates into
    /// the parents' grad buffers.
    backward: Option<BackwardFn<S>>,
}

/// Shared handle to a graph node. Cloning is cheap and aliases the node.
pub struct Tensor<S: Scalar> {
    node: Rc<Node<S>>,
}

impl<S: Scalar> Clone for Tensor<S> {
    fn clone(&self) -> Self {
        Self {
            node: Rc::clone(&self.node),
        }
    }
}

impl<S: Scalar> Debug for Tensor<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Tensor(id={}, shape={}, requires_grad={})",
            self.node.id, self.node.shape, self.node.requires_grad
        )
    }
}

impl<S: Scalar> Tensor<S> {
    fn from_node(node: Node<S>) -> Self {
        Self {
            node: Rc::new(node),
        }
    }

    /// A constant leaf: never receives gradients.
    pub fn constant(shape: Shape, data: Vec<S>) -> Self {
        assert_eq!(data.len(), shape.len(), "data length must match shape");
        Self::from_node(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad: false,
            parents: Vec::new(),
            backward: None,
        })
    }

    /// A trainable leaf: participates in backward and keeps its gradient.
    pub fn param(shape: Shape, data: Vec<S>) -> Self {
        assert_eq!(data.len(), shape.len(), "data length must match shape");
        Self::from_node(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad: true,
            parents: Vec::new(),
            backward: None,
        })
    }

    pub fn scalar(v: S) -> Self {
        Self::constant(Shape::scalar(), vec![v])
    }

    pub fn zeros(shape: Shape) -> Self {
        Self::constant(shape, vec![S::zero(); shape.len()])
    }

    pub fn shape(&self) -> Shape {
        self.node.shape
    }

    pub fn requires_grad(&self) -> bool {
        self.node.requires_grad
    }

    pub fn data(&self) -> Ref<'_, Vec<S>> {
        self.node.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<S> {
        self.node.data.borrow().clone()
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self) -> S {
        debug_assert!(self.shape().is_scalar());
        self.node.data.borrow()[0]
    }

    /// Replace the stored values (optimizer updates on leaf parameters).
    pub fn set_data(&self, new: &[S]) {
        let mut d = self.node.data.borrow_mut();
        assert_eq!(d.len(), new.len(), "set_data length mismatch");
        d.copy_from_slice(new);
    }

    pub fn grad(&self) -> Option<Vec<S>> {
        self.node.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.node.grad.borrow_mut() = None;
    }

    pub(crate) fn accumulate_grad(&self, update: impl FnOnce(&mut [S])) {
        let mut slot = self.node.grad.borrow_mut();
        let buf = slot.get_or_insert_with(|| vec![S::zero(); self.shape().len()]);
        update(buf);
    }

    /// Same values, cut loose from the graph.
    pub fn detach(&self) -> Self {
        Self::constant(self.shape(), self.to_vec())
    }

    /// True if any value is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.node.data.borrow().iter().any(|v| !v.is_finite())
    }
}

/// Construct an op node. If no parent needs gradients the result collapses
/// to a constant, so untracked subgraphs are freed immediately and never run
/// backward.
pub(crate) fn make_op<S: Scalar>(
    shape: Shape,
    data: Vec<S>,
    parents: Vec<Tensor<S>>,
    backward: BackwardFn<S>,
) -> Tensor<S> {
    assert_eq!(data.len(), shape.len(), "op output length must match shape");
    let requires_grad = parents.iter().any(|p| p.requires_grad());
    if !requires_grad {
        return Tensor::constant(shape, data);
    }
    Tensor::from_node(Node {
        id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        shape,
        data: RefCell::new(data),
        grad: RefCell::new(None),
        requires_grad: true,
        parents,
        backward: Some(backward),
    })
}

/// Reverse-mode sweep from a scalar loss. Visits each reachable node exactly
/// once in reverse topological order; fan-out gradients accumulate
/// additively. Leaf parameters keep their gradients for the optimizer.
pub fn backward<S: Scalar>(loss: &Tensor<S>) -> Result<()> {
    if !loss.shape().is_scalar() {
        return Err(Error::Validation(format!(
            "backward needs a scalar loss, got shape {}",
            loss.shape()
        )));
    }
    // iterative post-order DFS over parent edges
    let mut order: Vec<Tensor<S>> = Vec::new();
    let mut visited: HashSet<u64> = HashSet::new();
    let mut stack: Vec<(Tensor<S>, usize)> = vec![(loss.clone(), 0)];
    visited.insert(loss.node.id);
    while let Some((t, child_idx)) = stack.pop() {
        if child_idx < t.node.parents.len() {
            let parent = t.node.parents[child_idx].clone();
            stack.push((t, child_idx + 1));
            if parent.node.requires_grad && visited.insert(parent.node.id) {
                stack.push((parent, 0));
            }
        } else {
            order.push(t);
        }
    }

    loss.accumulate_grad(|g| g[0] = S::one());
    for t in order.iter().rev() {
        let Some(back) = &t.node.backward else {
            continue;
        };
        let grad = t.node.grad.borrow();
        let Some(grad) = grad.as_ref() else {
            continue;
        };
        let data = t.node.data.borrow();
        back(grad, &data, &t.node.parents);
    }
    Ok(())
}
