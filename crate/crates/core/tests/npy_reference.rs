//! NPY/NPZ reading checked against files produced by `ndarray-npy`.

use std::io::Cursor;

use glog_core::volume_io::{read_npy, read_npz, Dataset, Split, TensorData};
use ndarray::{Array2, Array3};
use ndarray_npy::{NpzWriter, WriteNpyExt};

fn u8_stack() -> Array3<u8> {
    Array3::from_shape_fn((3, 28, 28), |(n, r, c)| ((n * 97 + r * 28 + c) % 256) as u8)
}

#[test]
fn u8_stack_matches_reference_writer() {
    let a = u8_stack();
    let mut bytes = Vec::new();
    a.write_npy(&mut bytes).unwrap();
    let t = read_npy(&bytes).unwrap();
    assert_eq!(t.dims, vec![3, 28, 28]);
    assert_eq!(t.data, TensorData::U8(a.iter().copied().collect()));
}

#[test]
fn float_arrays_match_reference_writer() {
    let a = Array2::from_shape_fn((4, 5), |(r, c)| r as f64 * 0.25 - c as f64);
    let mut bytes = Vec::new();
    a.write_npy(&mut bytes).unwrap();
    assert_eq!(read_npy(&bytes).unwrap().data, TensorData::F64(a.iter().copied().collect()));

    let b = a.mapv(|v| v as f32);
    let mut bytes = Vec::new();
    b.write_npy(&mut bytes).unwrap();
    assert_eq!(read_npy(&bytes).unwrap().data, TensorData::F32(b.iter().copied().collect()));
}

fn archive(compressed: bool) -> Vec<u8> {
    let cursor = Cursor::new(Vec::new());
    let mut w = if compressed {
        NpzWriter::new_compressed(cursor)
    } else {
        NpzWriter::new(cursor)
    };
    w.add_array("train_images", &u8_stack()).unwrap();
    w.add_array("train_labels", &Array2::from_shape_vec((3, 1), vec![0u8, 1, 1]).unwrap())
        .unwrap();
    w.finish().unwrap().into_inner()
}

#[test]
fn stored_and_deflated_archives_agree() {
    let stored = archive(false);
    let deflated = archive(true);
    assert_ne!(stored, deflated);
    for member in ["train_images", "train_labels"] {
        assert_eq!(read_npz(&stored, member).unwrap(), read_npz(&deflated, member).unwrap());
    }
    let d = Dataset::from_npz(&deflated, Split::Train, None).unwrap();
    assert_eq!(d.labels, vec![0, 1, 1]);
    assert_eq!(d.num_classes, 2);
    assert_eq!(d.volumes[2].dims(), &[28, 28]);
    assert_eq!(d.volumes[0].data()[1], 1.0 / 255.0);
}
