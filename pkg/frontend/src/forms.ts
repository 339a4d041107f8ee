// Form generation from task import signatures.
//
// A signature is a list of [type, name] pairs straight from the gateway
// (GET /i-data/:pc lists them per enabled task). Field names follow the
// annotation convention of a leading underscore for check-in parameters;
// labels strip it. Values are kept as raw strings until submission so a
// half-filled form survives refreshes unchanged.

import type { FieldPair } from "./api.js";

export type FieldType = "bool" | "int" | "text";

export interface FormField {
  name: string;
  label: string;
  type: FieldType;
}

export class FieldError extends Error {
  constructor(readonly field: string, message: string) {
    super(`${field}: ${message}`);
  }
}

export function fieldsFor(imports: FieldPair[]): FormField[] {
  return imports.map(([type, name]) => {
    if (type !== "bool" && type !== "int" && type !== "text") {
      throw new FieldError(name, `unsupported type ${type}`);
    }
    return {
      name,
      label: name.startsWith("_") ? name.slice(1) : name,
      type,
    };
  });
}

export function parseValue(field: FormField, raw: string): boolean | number | string {
  const text = raw.trim();
  switch (field.type) {
    case "bool": {
      if (text === "true" || text === "1" || text === "yes") return true;
      if (text === "false" || text === "0" || text === "no") return false;
      throw new FieldError(field.name, `not a boolean: "${raw}"`);
    }
    case "int": {
      if (!/^-?\d+$/.test(text)) {
        throw new FieldError(field.name, `not an integer: "${raw}"`);
      }
      const n = Number(text);
      if (!Number.isSafeInteger(n)) {
        throw new FieldError(field.name, "integer out of range");
      }
      return n;
    }
    case "text":
      return raw;
  }
}

// Raw drafts come from input elements, so everything is a string; checkbox
// state is serialized as "true"/"false" by the view layer.
export function buildPayload(
  fields: FormField[],
  draft: Record<string, string>,
): Record<string, boolean | number | string> {
  const payload: Record<string, boolean | number | string> = {};
  for (const field of fields) {
    const raw = draft[field.name];
    if (raw === undefined || (field.type !== "text" && raw.trim() === "")) {
      throw new FieldError(field.name, "required");
    }
    payload[field.name] = parseValue(field, raw);
  }
  return payload;
}

export function emptyDraft(fields: FormField[]): Record<string, string> {
  const draft: Record<string, string> = {};
  for (const field of fields) {
    draft[field.name] = field.type === "bool" ? "false" : "";
  }
  return draft;
}
