//! The builtin registry. The interpreter checks calls against it and the
//! Coder's library reference is generated from it.

use crate::geometry::{CurveKind, PrimitiveKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgType {
    /// Reference to a previously created object.
    Object,
    Number,
    Int,
    Bool,
    Str,
    /// 2- or 3-tuple of numbers.
    Vec3,
    /// 3-tuple of booleans.
    Flags3,
    /// List of 2- or 3-tuples.
    Points,
}

impl ArgType {
    pub fn describe(self) -> &'static str {
        match self {
            ArgType::Object => "an object name",
            ArgType::Number => "a number",
            ArgType::Int => "an integer",
            ArgType::Bool => "true or false",
            ArgType::Str => "a string",
            ArgType::Vec3 => "a tuple of 3 numbers",
            ArgType::Flags3 => "a tuple of 3 booleans",
            ArgType::Points => "a list of (x, y, z) tuples",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub ty: ArgType,
    /// Default as shown in the reference; `None` means required.
    pub default: Option<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinGroup {
    Primitive(PrimitiveKind),
    Curve(CurveKind),
    BoundingBox,
    Modifier,
    /// `to_mesh`: accepted for compatibility, geometry is always a mesh.
    ToMesh,
}

#[derive(Debug, Clone, Copy)]
pub struct BuiltinSpec {
    pub name: &'static str,
    pub group: BuiltinGroup,
    pub params: &'static [ParamSpec],
    pub summary: &'static str,
}

impl BuiltinSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn is_modifier(&self) -> bool {
        matches!(self.group, BuiltinGroup::Modifier | BuiltinGroup::ToMesh)
    }

    /// Signature line as shown to the Coder.
    pub fn signature(&self) -> String {
        let args: Vec<String> = self
            .params
            .iter()
            .map(|p| match p.default {
                None => p.name.to_string(),
                Some(d) => format!("{}={d}", p.name),
            })
            .collect();
        let prefix = if self.is_modifier() { "Modifiers." } else { "" };
        format!("{prefix}{}({})", self.name, args.join(", "))
    }
}

const fn req(name: &'static str, ty: ArgType) -> ParamSpec {
    ParamSpec { name, ty, default: None }
}

const fn opt(name: &'static str, ty: ArgType, default: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        default: Some(default),
    }
}

const NAME: ParamSpec = opt("name", ArgType::Str, "\"\"");
const POSITION: ParamSpec = opt("position", ArgType::Vec3, "(0,0,0)");
const ROTATION: ParamSpec = opt("rotation", ArgType::Vec3, "(0,0,0)");
const SCALE: ParamSpec = opt("scale", ArgType::Vec3, "(1,1,1)");
const BEVEL_DEPTH: ParamSpec = opt("bevel_depth", ArgType::Number, "0.0");
const EXTRUDE: ParamSpec = opt("extrude", ArgType::Number, "0.0");
const FILL_CAPS: ParamSpec = opt("fill_caps", ArgType::Bool, "false");
const TO_MESH: ParamSpec = opt("to_mesh", ArgType::Bool, "true");

use ArgType::*;

pub static BUILTINS: &[BuiltinSpec] = &[
    BuiltinSpec {
        name: "cube",
        group: BuiltinGroup::Primitive(PrimitiveKind::Cube),
        params: &[NAME, POSITION, ROTATION, SCALE],
        summary: "Box with half-extent 1 along each axis at scale (1,1,1).",
    },
    BuiltinSpec {
        name: "sphere",
        group: BuiltinGroup::Primitive(PrimitiveKind::Sphere),
        params: &[
            NAME,
            POSITION,
            ROTATION,
            SCALE,
            opt("segments", Int, "32"),
            opt("rings", Int, "16"),
        ],
        summary: "UV sphere of radius 1; segments around z, rings from pole to pole.",
    },
    BuiltinSpec {
        name: "cylinder",
        group: BuiltinGroup::Primitive(PrimitiveKind::Cylinder),
        params: &[
            NAME,
            POSITION,
            ROTATION,
            SCALE,
            opt("vertices", Int, "32"),
            opt("depth", Number, "2"),
            opt("radius", Number, "1"),
        ],
        summary: "Capped cylinder along z; depth is the full height.",
    },
    BuiltinSpec {
        name: "cone",
        group: BuiltinGroup::Primitive(PrimitiveKind::Cone),
        params: &[
            NAME,
            POSITION,
            ROTATION,
            SCALE,
            opt("vertices", Int, "32"),
            opt("radius", Number, "1"),
            opt("depth", Number, "2"),
        ],
        summary: "Cone along z with its base at -depth/2 and apex at +depth/2.",
    },
    BuiltinSpec {
        name: "plane",
        group: BuiltinGroup::Primitive(PrimitiveKind::Plane),
        params: &[NAME, POSITION, ROTATION, SCALE, opt("size", Number, "2")],
        summary: "Flat square in the xy plane with side length size; has no thickness.",
    },
    BuiltinSpec {
        name: "bezier_curve",
        group: BuiltinGroup::Curve(CurveKind::Bezier),
        params: &[NAME, req("points", Points), BEVEL_DEPTH, EXTRUDE, FILL_CAPS, TO_MESH],
        summary: "Smooth curve through the given points. bevel_depth>0 makes a round tube of that radius, extrude>0 a ribbon along z; fill_caps closes the ends.",
    },
    BuiltinSpec {
        name: "circle",
        group: BuiltinGroup::Curve(CurveKind::Circle),
        params: &[
            NAME,
            opt("location", Vec3, "(0,0,0)"),
            opt("radius", Number, "1.0"),
            opt("segments", Int, "32"),
            BEVEL_DEPTH,
            EXTRUDE,
            FILL_CAPS,
            TO_MESH,
        ],
        summary: "Closed circle in the xy plane. bevel_depth>0 makes a torus-like tube, extrude>0 a band along z.",
    },
    BuiltinSpec {
        name: "polyline",
        group: BuiltinGroup::Curve(CurveKind::Polyline),
        params: &[
            NAME,
            req("points", Points),
            opt("closed", Bool, "false"),
            BEVEL_DEPTH,
            EXTRUDE,
            FILL_CAPS,
            TO_MESH,
        ],
        summary: "Straight segments through the points; closed joins the last point to the first. Same bevel/extrude rules as bezier_curve.",
    },
    BuiltinSpec {
        name: "pyramid",
        group: BuiltinGroup::Primitive(PrimitiveKind::Pyramid),
        params: &[
            NAME,
            POSITION,
            ROTATION,
            SCALE,
            opt("base_size", Number, "2"),
            opt("height", Number, "2"),
        ],
        summary: "Square-based pyramid, base centred at z=-height/2.",
    },
    BuiltinSpec {
        name: "capsule",
        group: BuiltinGroup::Primitive(PrimitiveKind::Capsule),
        params: &[
            NAME,
            POSITION,
            ROTATION,
            SCALE,
            opt("radius", Number, "1"),
            opt("height", Number, "2"),
            opt("segments", Int, "32"),
        ],
        summary: "Cylinder of the given height along z with a hemisphere on each end.",
    },
    BuiltinSpec {
        name: "prism",
        group: BuiltinGroup::Primitive(PrimitiveKind::Prism),
        params: &[
            NAME,
            POSITION,
            ROTATION,
            SCALE,
            opt("sides", Int, "3"),
            opt("radius", Number, "1"),
            opt("height", Number, "2"),
        ],
        summary: "Regular n-sided prism along z.",
    },
    BuiltinSpec {
        name: "cube_bounding_box",
        group: BuiltinGroup::BoundingBox,
        params: &[NAME, POSITION, SCALE],
        summary: "Axis-aligned box used as a bounding box; scale gives the half-extents.",
    },
    BuiltinSpec {
        name: "boolean",
        group: BuiltinGroup::Modifier,
        params: &[
            req("obj_a", Object),
            req("obj_b", Object),
            opt("operation", Str, "'DIFFERENCE'"),
            opt("remove", Bool, "true"),
        ],
        summary: "INTERSECT, UNION or DIFFERENCE of two closed objects; the result replaces obj_a and obj_b is deleted unless remove=false.",
    },
    BuiltinSpec {
        name: "subdivision",
        group: BuiltinGroup::Modifier,
        params: &[req("obj", Object), opt("levels", Int, "2"), opt("render_levels", Int, "3")],
        summary: "Smooths the object with `levels` rounds of subdivision (each round multiplies the face count by 4). render_levels is ignored.",
    },
    BuiltinSpec {
        name: "bevel",
        group: BuiltinGroup::Modifier,
        params: &[
            req("obj", Object),
            opt("width", Number, "0.1"),
            opt("segments", Int, "3"),
            opt("affect", Str, "'EDGES'"),
        ],
        summary: "Chamfers sharp edges (affect='EDGES') or cuts off corners (affect='VERTICES').",
    },
    BuiltinSpec {
        name: "array",
        group: BuiltinGroup::Modifier,
        params: &[
            req("obj", Object),
            opt("count", Int, "5"),
            opt("relative_offset", Vec3, "(1.2, 0, 0)"),
        ],
        summary: "Repeats the object count times; each copy is shifted by relative_offset times the object's size.",
    },
    BuiltinSpec {
        name: "mirror",
        group: BuiltinGroup::Modifier,
        params: &[
            req("obj", Object),
            opt("axis", Flags3, "(True, False, False)"),
            opt("use_clip", Bool, "true"),
        ],
        summary: "Adds a mirrored copy across the x=0, y=0 and/or z=0 planes; use_clip keeps vertices from crossing the plane.",
    },
    BuiltinSpec {
        name: "curve",
        group: BuiltinGroup::Modifier,
        params: &[
            req("obj", Object),
            req("curve_obj", Object),
            opt("deform_axis", Str, "'POS_X'"),
        ],
        summary: "Bends obj so that its deform_axis follows curve_obj (POS_X, NEG_X, POS_Y, NEG_Y, POS_Z or NEG_Z).",
    },
    BuiltinSpec {
        name: "solidify",
        group: BuiltinGroup::Modifier,
        params: &[req("obj", Object), opt("thickness", Number, "0.2")],
        summary: "Gives a surface thickness by offsetting it inwards and closing the rim.",
    },
    BuiltinSpec {
        name: "to_mesh",
        group: BuiltinGroup::ToMesh,
        params: &[req("obj", Object)],
        summary: "Accepted for compatibility; objects are always meshes already.",
    },
];

/// Names that exist in the wider library but are not supported here.
pub const UNSUPPORTED: &[&str] = &["text"];

pub fn lookup(name: &str) -> Option<&'static BuiltinSpec> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// The library reference handed to the Coder. `include_bbox` adds the
/// bounding-box builtin, which node programs do not need.
pub fn library_reference(include_bbox: bool) -> String {
    let mut out = String::new();
    for b in BUILTINS {
        if b.group == BuiltinGroup::BoundingBox && !include_bbox {
            continue;
        }
        out.push_str(&format!("# {}\n{}\n\n", b.summary, b.signature()));
    }
    out.truncate(out.trim_end().len());
    out.push('\n');
    out
}
