mod common;

use gsdeform::composite::{alpha_composite, boundary_mask};
use gsdeform::render::{render, Camera, ImageRgb, ImageRgba};
use gsdeform::{apply_lbs, bind, build_control_graph, deform, synth, ControlGraph, GaussianCloud, GraphOptions, HandleSet, LoadOptions, Vec3};
use nalgebra::{Rotation3, Unit};

#[test]
fn arc_tips_do_not_share_neighborhoods() {
    // the tips of the C are about 0.7 apart in space but far apart along the curve;
    // controls must be dense enough that no k/2-NN edge spans the gap
    let cloud = synth::arc(4_000, 2.0, 0.05, 8).unwrap();
    let graph = build_control_graph(&cloud, &GraphOptions { control_count: 256, ..Default::default() }).unwrap();
    let angle = |p: &Vec3| p.y.atan2(p.x);
    for i in 0..graph.len() {
        let a = angle(&graph.rest_positions()[i]);
        for &j in graph.neighbors(i) {
            let b = angle(&graph.rest_positions()[j]);
            assert!((a - b).abs() < 1.0, "node at {a:.2} rad neighbors node at {b:.2} rad");
        }
    }
}

#[test]
fn files_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let layout = synth::Dumbbell::default();
    let cloud = synth::dumbbell(6_000, &layout, 3).unwrap();
    cloud.save(dir.path().join("in.ply"), LoadOptions::default()).unwrap();
    let cloud = GaussianCloud::load(dir.path().join("in.ply"), LoadOptions::default()).unwrap();

    let graph = build_control_graph(&cloud, &GraphOptions { control_count: 256, ..Default::default() }).unwrap();
    graph.save(dir.path().join("graph.json")).unwrap();
    let graph = ControlGraph::load(dir.path().join("graph.json")).unwrap();

    // bend the right blob down about the bridge's midpoint
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::z()), -0.4);
    let rest = graph.rest_positions();
    let indices: Vec<usize> = (0..graph.len()).filter(|&i| rest[i].x.abs() > 2.5).collect();
    let targets = indices.iter().map(|&i| if rest[i].x > 0.0 { rot * rest[i] } else { rest[i] }).collect();
    std::fs::write(dir.path().join("h.json"), HandleSet::new(indices, targets).unwrap().to_json().unwrap()).unwrap();
    let handles = HandleSet::load(dir.path().join("h.json")).unwrap();

    let result = deform(&graph, &handles, 3).unwrap();
    assert_eq!(result.energy_trace.len(), 6);
    let posed = apply_lbs(&cloud, &bind(&cloud, &graph, 3).unwrap(), &graph, &result).unwrap();
    posed.save(dir.path().join("out.ply"), LoadOptions::default()).unwrap();

    let camera = Camera::look_at(Vec3::new(0.0, 0.0, -9.0), Vec3::zeros(), -Vec3::y(), 0.8, 120, 80).unwrap();
    camera.save(dir.path().join("cam.json")).unwrap();
    let camera = Camera::load(dir.path().join("cam.json")).unwrap();
    let before = render(&cloud, &camera);
    let after = render(&GaussianCloud::load(dir.path().join("out.ply"), LoadOptions::default()).unwrap(), &camera);
    assert_ne!(before, after);

    after.save_png(dir.path().join("fg.png")).unwrap();
    let fg = ImageRgba::load_png(dir.path().join("fg.png")).unwrap();
    let bg = ImageRgb::filled(120, 80, [1.0, 1.0, 1.0]);
    let out = alpha_composite(&fg, &bg).unwrap();
    let mask = boundary_mask(&fg.alpha(), 120, 80, 0.5, 3).unwrap();
    assert!(mask.count() > 0);
    // far corners show the background and are outside the band
    assert_eq!(out.get(0, 0), [1.0, 1.0, 1.0]);
    assert!(!mask.get(0, 0));
    // the object covers the center of the left blob's projection
    let (u, v) = camera.project(&camera.world_to_camera(&layout.left_center));
    assert!(fg.get(u as usize, v as usize)[3] > 0.9);
}
