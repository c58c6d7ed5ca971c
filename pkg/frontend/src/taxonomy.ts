// The eight message categories in fixed codebook order: the gain row
// first, then the loss row, each from extrinsic to intrinsic. Digit
// shortcuts 1-8 index into this array; 0 is "not a message". The labels
// are the service's category vocabulary and must not be reworded here.

export type Frame = "gain" | "loss";
export type Appeal = "extrinsic" | "introjected" | "identified" | "intrinsic";

export interface Category {
  label: string;
  frame: Frame;
  appeal: Appeal;
  title: string;
}

const APPEALS: readonly Appeal[] = [
  "extrinsic",
  "introjected",
  "identified",
  "intrinsic",
];

function row(frame: Frame): Category[] {
  return APPEALS.map((appeal) => ({
    label: `${frame}_${appeal}`,
    frame,
    appeal,
    title: `${frame === "gain" ? "Gain" : "Loss"} / ${appeal}`,
  }));
}

export const CATEGORIES: readonly Category[] = [...row("gain"), ...row("loss")];

export const NOT_A_MESSAGE = "not_a_message";

/** Category for a digit key 1-8; undefined for anything else. */
export function categoryForDigit(digit: number): Category | undefined {
  if (!Number.isInteger(digit) || digit < 1 || digit > 8) return undefined;
  return CATEGORIES[digit - 1];
}
