use std::collections::BTreeSet;

use vineyard_core::interval::int;
use vineyard_core::io::generate::annulus_vineyard;
use vineyard_core::io::svg::render_svg;
use vineyard_core::vineyard::{TimeGrid, Vineyard};

#[test]
fn annulus_drawing_has_two_vines_and_critical_lines() {
    let text = render_svg(&annulus_vineyard());
    let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
    let vines: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("vine")).collect();
    assert_eq!(vines.len(), 2);
    let colors: BTreeSet<_> = vines.iter().filter_map(|n| n.attribute("stroke")).collect();
    assert_eq!(colors.len(), 2);
    for v in &vines {
        assert_eq!(v.children().filter(|c| c.has_tag_name("polyline")).count(), 2);
    }
    let critical = doc.descendants().find(|n| n.attribute("class") == Some("critical")).unwrap();
    assert!(critical.attribute("stroke-dasharray").is_some());
    let times: Vec<_> = critical.children().filter_map(|n| n.attribute("data-time")).collect();
    assert_eq!(times, ["3", "7"]);
    // Time 0..10 maps linearly onto 50..750.
    let xs: Vec<_> = critical.children().filter_map(|n| n.attribute("x1")).collect();
    assert_eq!(xs, ["260.00", "540.00"]);
}

#[test]
fn empty_vineyard_is_a_valid_plot() {
    let v = Vineyard::new(TimeGrid::new(vec![int(0), int(1)]).unwrap(), vec![]).unwrap();
    let text = render_svg(&v);
    let doc = roxmltree::Document::parse(&text).expect("well-formed XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 0);
}
