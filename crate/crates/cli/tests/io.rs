use std::path::Path;

use ompath::io::{parse_trajectory, read_trajectory, trajectory_csv, write_trajectory};
use ompath_core::{Trajectory, Vector};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn full(n: usize, d: usize) -> Trajectory {
    let t = Trajectory::from_fn(0.0, 1.0, n, |t| Vector::from_fn(d, |i, _| (t + i as f64).sin() / 3.0)).unwrap();
    let p = t.states().iter().map(|x| x.map(|c| c.exp() * 1e-7)).collect();
    let th = t.states().iter().map(|x| x.map(|c| -c / 7.0)).collect();
    t.with_costates(p).unwrap().with_controls(th).unwrap()
}

#[test]
fn three_nodes_make_four_lines() {
    let traj = full(3, 1);
    let text = String::from_utf8(trajectory_csv(&traj, Path::new("x.csv")).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "t,x1,p1,theta1");
}

#[test]
fn header_lists_all_columns() {
    let text = String::from_utf8(trajectory_csv(&full(4, 3), Path::new("x.csv")).unwrap()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x1,x2,x3,p1,p2,p3,theta1,theta2,theta3");
}

#[test]
fn written_trajectory_reads_back_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/traj.csv");
    for d in [1, 2, 3] {
        let traj = full(37, d);
        write_trajectory(&path, &traj).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back, traj);
        for (a, b) in back.states().iter().zip(traj.states()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}

#[test]
fn awkward_values_survive() {
    let states = vec![v(&[f64::MIN_POSITIVE]), v(&[-0.0]), v(&[1.0 / 3.0]), v(&[f64::MAX])];
    let traj = Trajectory::new(vec![0.0, 0.1, 0.2, 0.30000000000000004], states).unwrap();
    let text = trajectory_csv(&traj, Path::new("x.csv")).unwrap();
    let back = parse_trajectory(std::str::from_utf8(&text).unwrap(), Path::new("x.csv")).unwrap();
    for (a, b) in back.states().iter().zip(traj.states()) {
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }
}

#[test]
fn state_only_files_are_accepted() {
    let traj = parse_trajectory("t,x1,x2\n0,1,2\n0.5,1.5,2.5\n1,2,3\n", Path::new("r.csv")).unwrap();
    assert_eq!(traj.dim(), 2);
    assert!(traj.costates().is_none() && traj.controls().is_none());
}

#[test]
fn malformed_files_are_rejected() {
    for text in ["x1\n1\n", "t,y\n0,1\n", "t,x1\n0,abc\n", "t,x1,x2\n0,1\n"] {
        assert!(parse_trajectory(text, Path::new("bad.csv")).is_err(), "{text:?}");
    }
}

#[test]
fn missing_file_names_the_path() {
    let msg = read_trajectory(Path::new("/nonexistent/traj.csv"))
        .unwrap_err()
        .to_string();
    assert!(msg.contains("/nonexistent/traj.csv"), "{msg}");
}
