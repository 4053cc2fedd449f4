def simple_unit(value_type, choices=None):
    return {
        "type": "object",
        "properties": {
            "Description": {"type": "string"},
            "Value": {"type": value_type} if choices is None else {"type": value_type, "enum": choices},
            "Type": {"type": "string", "enum": ["Integer", "Float", "String", "Bool"]},
            "Choices": {"type": "array"}
        },
        "required": ["Value"],
        "additionalProperties": False
    }


def list_unit(items, min_items=None, max_items=None):
    value = {"type": "array", "items": items}
    if min_items is not None:
        value["minItems"] = min_items
    if max_items is not None:
        value["maxItems"] = max_items
    return {
        "type": "object",
        "properties": {
            "Description": {"type": "string"},
            "Value": value,
            "Type": {"const": "List"},
            "SubType": {"type": "string", "enum": ["String", "Float", "Integer", "Map", "List"]},
            "Choices": {"type": "array"}
        },
        "required": ["Value"],
        "additionalProperties": False
    }


def fixed_list(length, item_type="number"):
    return list_unit({"type": item_type}, min_items=length, max_items=length)


def section(properties):
    return {
        "type": "object",
        "properties": {
            "Description": {"type": "string"},
            "Settings": {
                "type": "object",
                "properties": properties,
                "required": list(properties.keys()),
                "additionalProperties": False
            }
        },
        "required": ["Settings"],
        "additionalProperties": False
    }


POINT2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
POINT3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

OBSTACLE_ITEM = {
    "type": "object",
    "properties": {
        "Center": POINT2,
        "Radius": {"type": "number", "minimum": 0},
    },
    "required": ["Center", "Radius"],
    "additionalProperties": False
}

MOVER_ITEM = {
    "type": "object",
    "properties": {
        "Waypoints": {"type": "array", "items": POINT2, "minItems": 1},
        "Speed": {"type": "number", "minimum": 0},
        "StartTime": {"type": "number"},
        "Radius": {"type": "number", "minimum": 0},
        "Loop": {"type": "boolean"},
    },
    "required": ["Waypoints", "Speed", "Radius"],
    "additionalProperties": False
}

RUN_SCHEMA = section({
    "Seed": simple_unit("integer"),
    "Dt": simple_unit("number"),
    "TicksMax": simple_unit("integer"),
    "CrossingWindow": fixed_list(2),
    "DumpSensors": simple_unit("boolean"),
})

WORLD_SCHEMA = section({
    "RobotStart": fixed_list(3),
    "Trolley": fixed_list(3),
    "ReturnSpot": fixed_list(3),
    "Obstacles": list_unit(OBSTACLE_ITEM),
    "Movers": list_unit(MOVER_ITEM),
    "BackplaneHeight": simple_unit("number"),
    "BackplaneSize": fixed_list(2),
    "TrolleyBody": fixed_list(2),
    "PoseNoise": fixed_list(2),
})

FORK_SCHEMA = section({
    "Speed": simple_unit("number"),
    "GraspHeight": simple_unit("number"),
    "BlockHeight": simple_unit("number"),
    "TopHeight": simple_unit("number"),
    "GraspTolerance": fixed_list(2),
})

CAMERA_SCHEMA = section({
    "Fx": simple_unit("number"),
    "Fy": simple_unit("number"),
    "Cx": simple_unit("number"),
    "Cy": simple_unit("number"),
    "ImageSize": fixed_list(2, "integer"),
    "MountOffset": fixed_list(3),
    "MountHeight": simple_unit("number"),
    "KeypointTemplate": list_unit(POINT3, min_items=4),
    "NoiseBackPx": simple_unit("number"),
    "NoiseFrontPx": simple_unit("number"),
})

LIDAR_SCHEMA = section({
    "MountOffset": fixed_list(3),
    "MountHeight": simple_unit("number"),
    "Fov": fixed_list(2),
    "MaxRange": simple_unit("number"),
    "Density": simple_unit("integer"),
    "RangeNoise": simple_unit("number"),
    "Clutter": simple_unit("integer"),
    "JitterTranslation": simple_unit("number"),
    "JitterYaw": simple_unit("number"),
})

PERCEPTION_SCHEMA = section({
    "Alpha": simple_unit("number"),
    "MaxJumpM": simple_unit("number"),
    "MaxJumpRad": simple_unit("number"),
    "ReacquireAfter": simple_unit("integer"),
    "RefineMaxIters": simple_unit("integer"),
    "RefineTol": simple_unit("number"),
    "CropMin": fixed_list(3),
    "CropMax": fixed_list(3),
    "RansacIterations": simple_unit("integer"),
    "InlierTol": simple_unit("number"),
})

PLANNER_SCHEMA = section({
    "Horizon": simple_unit("integer"),
    "TerminalWeight": fixed_list(3),
    "ControlWeight": fixed_list(2),
    "SlackWeight": simple_unit("number"),
    "ObstacleDecay": simple_unit("number"),
    "ViewDecay": simple_unit("number"),
    "VBounds": fixed_list(2),
    "WBounds": fixed_list(2),
    "Workspace": fixed_list(4),
    "RobotRadius": simple_unit("number"),
    "Margin": simple_unit("number"),
    "ThetaMax": simple_unit("number"),
    "MaxIter": simple_unit("integer"),
    "KktTol": simple_unit("number"),
})

MISSION_SCHEMA = section({
    "ApproachStandoff": simple_unit("number"),
    "DockStandoff": simple_unit("number"),
    "DockSwitchRadius": simple_unit("number"),
    "DockBand": fixed_list(2),
    "DockExitDistance": simple_unit("number"),
    "CapturePosTol": simple_unit("number"),
    "CaptureAngTol": simple_unit("number"),
    "CaptureSettleTicks": simple_unit("integer"),
    "ReturnTol": simple_unit("number"),
    "SearchRate": simple_unit("number"),
    "TickBudgets": fixed_list(4, "integer"),
    "EpsPos": simple_unit("number"),
    "EpsStall": simple_unit("number"),
    "StallTicks": simple_unit("integer"),
    "GraspBand": fixed_list(2),
    "LiftTarget": simple_unit("number"),
})

SCENARIO_SETTINGS_SCHEMA = {
    "type": "object",
    "properties": {
        "General": {
            "type": "object",
            "properties": {
                "Run": RUN_SCHEMA,
                "World": WORLD_SCHEMA,
                "Fork": FORK_SCHEMA,
                "Camera": CAMERA_SCHEMA,
                "Lidar": LIDAR_SCHEMA,
                "Perception": PERCEPTION_SCHEMA,
                "Planner": PLANNER_SCHEMA,
                "Mission": MISSION_SCHEMA,
            },
            "required": ["Run", "World", "Fork", "Camera", "Lidar", "Perception", "Planner", "Mission"],
            "additionalProperties": False
        }
    },
    "required": ["General"],
    "additionalProperties": False
}
