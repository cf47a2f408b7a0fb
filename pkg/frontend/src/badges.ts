/** Display order for the four aspects, matching the service payload keys. */
export const ASPECT_ORDER = [
  'actionability',
  'grounding_specificity',
  'verifiability',
  'helpfulness',
] as const;

export const ASPECT_TITLES: Record<string, string> = {
  actionability: 'Actionability',
  grounding_specificity: 'Grounding & Specificity',
  verifiability: 'Verifiability',
  helpfulness: 'Helpfulness',
};

/**
 * CSS classes for one score badge. Labels 1 through 5 sit on the color
 * ramp; any other label (the no-claim "X" state) gets the neutral look.
 * The label text itself is rendered verbatim, never remapped here.
 */
export function badgeClass(label: string): string {
  return /^[1-5]$/.test(label) ? `badge scale-${label}` : 'badge no-claim';
}
