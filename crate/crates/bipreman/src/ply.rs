//! ASCII PLY export for object models and scored point clouds.

use crate::scene::{LabeledCloud, ObjectModel};
use std::io::{self, Write};

/// Writes an object model's canonical points with a per-vertex integer
/// `part` property.
pub fn write_object_model<W: Write>(w: &mut W, obj: &ObjectModel) -> io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment category {}", obj.category.name())?;
    writeln!(w, "element vertex {}", obj.canonical_points.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    writeln!(w, "property int part")?;
    writeln!(w, "end_header")?;
    for (p, label) in obj.canonical_points.iter().zip(&obj.labels) {
        writeln!(
            w,
            "{} {} {} {}",
            p.x() as f32,
            p.y() as f32,
            p.z() as f32,
            label.to_u8()
        )?;
    }
    Ok(())
}

/// Writes a cloud with a per-vertex float `score` property (0 when the cloud
/// carries no scores).
pub fn write_scored_cloud<W: Write>(w: &mut W, cloud: &LabeledCloud) -> io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    writeln!(w, "property int part")?;
    writeln!(w, "property float score")?;
    writeln!(w, "end_header")?;
    for i in 0..cloud.len() {
        let p = cloud.points[i];
        let s = cloud.scores.as_ref().map(|s| s[i]).unwrap_or(0.0);
        writeln!(
            w,
            "{} {} {} {} {}",
            p.x() as f32,
            p.y() as f32,
            p.z() as f32,
            cloud.labels[i].to_u8(),
            s as f32
        )?;
    }
    Ok(())
}
